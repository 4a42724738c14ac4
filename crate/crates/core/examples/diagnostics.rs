//! Local stability numbers, dimension table and block-system agreement for
//! every operator kind.

use etdg::prelude::*;

fn main() -> Result<()> {
    let mesh = build_structured_mesh(4)?;
    let settings = LocalSettings::default();
    for (kind, case) in [
        (OperatorKind::AdvectionReaction, BuiltinCase::ArExample),
        (OperatorKind::DiffusionAdvectionReaction, BuiltinCase::DarExample),
        (OperatorKind::DiffusionBox, BuiltinCase::BoxDiffusion2d),
        (OperatorKind::QuasiTrefftzDiffusion, BuiltinCase::QtDiffusion),
    ] {
        let report = run_diagnostics(&mesh, 4, kind, &case.coefficients(), &settings, default_sigma(4))?;
        println!("{report}");
    }
    Ok(())
}
