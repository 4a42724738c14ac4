//! Advection-reaction sweep: full DG against the embedded Trefftz space.
//!
//! `cargo run --release --example ar_convergence`

use etdg::prelude::*;

fn main() -> Result<()> {
    let cfg = ExperimentConfig {
        case: BuiltinCase::ArExample,
        methods: vec![ExperimentMethod::Dg, ExperimentMethod::Et],
        p_list: vec![2, 3],
        n_list: vec![4, 8, 16],
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg)?;
    print!("{}", out.csv());
    print!("{}", out.eoc_table());
    Ok(())
}
