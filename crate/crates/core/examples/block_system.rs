//! Solves the same problem through the reduced Trefftz system and through the
//! coupled block system, with both complement choices, and compares.

use etdg::linalg::norm2;
use etdg::prelude::*;

fn main() -> Result<()> {
    let case = BuiltinCase::DarExample.coefficients();
    let p = 3;
    let space = DgSpace::new(build_structured_mesh(4)?, p)?;
    let sys = assemble_global_system(FormKind::DarSip, &space, &case, default_sigma(p))?;
    let (ops, emb) = build_embedding(
        &space,
        OperatorKind::DiffusionAdvectionReaction,
        &case,
        &LocalSettings::default(),
        RankRule::default(),
    )?;
    let reduced = solve_embedded_trefftz(&sys, &emb)?;
    let r = &reduced.coefficients;
    for rule in [ComplementRule::SvdComplement, ComplementRule::MinnormImage] {
        let block = solve_block_coupled(&ops, &sys, &emb, rule, space.bases())?;
        let diff: Vec<f64> = block.coefficients.iter().zip(r).map(|(a, b)| a - b).collect();
        let (ul, _) = block.split.as_ref().expect("block solve returns a split");
        println!(
            "{rule:?}: relative gap {:.2e}, |u_L| {:.6e}",
            norm2(&diff) / norm2(r),
            norm2(ul)
        );
    }
    Ok(())
}
