//! Diffusion-advection-reaction with symmetric interior penalty.
//!
//! `cargo run --release --example dar_convergence -- 3`

use etdg::prelude::*;

fn main() -> Result<()> {
    let p: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let case = BuiltinCase::DarExample.coefficients();
    let sigma = default_sigma(p);
    println!("n ndof ndof_T l2_dg l2_et dg_dg dg_et");
    for n in [4, 8, 16] {
        let space = DgSpace::new(build_structured_mesh(n)?, p)?;
        let sys = assemble_global_system(FormKind::DarSip, &space, &case, sigma)?;
        let (_, emb) = build_embedding(
            &space,
            OperatorKind::DiffusionAdvectionReaction,
            &case,
            &LocalSettings::default(),
            RankRule::default(),
        )?;
        let norm = ErrorNorm::Diffusion { sigma };
        let dg = compute_errors(&space, &solve_standard_dg(&sys)?, &case, norm)?;
        let et = compute_errors(&space, &solve_embedded_trefftz(&sys, &emb)?, &case, norm)?;
        println!(
            "{n} {} {} {:.3e} {:.3e} {:.3e} {:.3e}",
            emb.ndof_full(),
            emb.ndof_trefftz(),
            dg.l2_error,
            et.l2_error,
            dg.vh_error,
            et.vh_error
        );
    }
    Ok(())
}
