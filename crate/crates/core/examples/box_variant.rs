//! Trefftz constraints imposed on a small axis-aligned box inside each
//! element, for a few box sizes.

use etdg::prelude::*;

fn main() -> Result<()> {
    for scale in [0.1, 0.25, 0.4] {
        let cfg = ExperimentConfig {
            case: BuiltinCase::BoxDiffusion2d,
            methods: vec![ExperimentMethod::Et, ExperimentMethod::EtBox],
            p_list: vec![3],
            n_list: vec![4, 8, 16],
            box_scale: scale,
            ..ExperimentConfig::default()
        };
        let out = run_experiment(&cfg)?;
        let (l2_et, _) = out.rates(ExperimentMethod::Et, 3)?;
        let (l2_box, dg_box) = out.rates(ExperimentMethod::EtBox, 3)?;
        println!("box_scale {scale}: et l2 rate {l2_et:.2}, etbox l2 rate {l2_box:.2}, dg rate {dg_box:.2}");
    }
    Ok(())
}
