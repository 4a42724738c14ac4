//! Point-derivative (quasi-Trefftz) constraints at element centroids for
//! variable diffusion.

use etdg::prelude::*;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        case: BuiltinCase::QtDiffusion,
        methods: vec![ExperimentMethod::Dg, ExperimentMethod::Et, ExperimentMethod::Qt],
        p_list: vec![3],
        n_list: vec![4, 8, 16],
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg)?;
    print!("{}", out.eoc_table());
    Ok(())
}
