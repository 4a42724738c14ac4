//! For the Laplacian the local Trefftz space is spanned by harmonic
//! polynomials. Projects `Re z^m`, `Im z^m` onto each element and measures
//! the part outside `span T_K`.

use etdg::basis::l2_project;
use etdg::linalg::{mat_t_vec, mat_vec, norm2};
use etdg::prelude::*;

fn harmonic(m: i32, imag: bool) -> impl Fn([f64; 2]) -> f64 {
    move |x| {
        let r = x[0].hypot(x[1]);
        let t = x[1].atan2(x[0]);
        let a = f64::from(m) * t;
        r.powi(m) * if imag { a.sin() } else { a.cos() }
    }
}

fn main() -> Result<()> {
    let case = PdeCoefficients::laplace_quadratic();
    let p = 5;
    let space = DgSpace::new(build_structured_mesh(2)?, p)?;
    let (_, emb) = build_embedding(
        &space,
        OperatorKind::DiffusionAdvectionReaction,
        &case,
        &LocalSettings::default(),
        RankRule::default(),
    )?;
    println!("local dim {}, Trefftz dim {}", space.local_dim(), emb.elements[0].n_trefftz());
    for m in 0..=p as i32 {
        for imag in [false, true] {
            if m == 0 && imag {
                continue;
            }
            let f = harmonic(m, imag);
            let mut worst = 0.0f64;
            for k in 0..space.num_elements() {
                let g = &space.mesh.geometries()[k];
                let q = quadrature_rule(Domain::Triangle(g.vertices), 2 * p + 2)?;
                let c = l2_project(&f, space.basis(k), &q);
                let t = &emb.elements[k].trefftz;
                let back = mat_vec(t, &mat_t_vec(t, &c));
                let out: Vec<f64> = c.iter().zip(&back).map(|(a, b)| a - b).collect();
                worst = worst.max(norm2(&out) / norm2(&c));
            }
            println!("{} z^{m}: relative distance {worst:.2e}", if imag { "Im" } else { "Re" });
        }
    }
    Ok(())
}
