//! Standard DG solve, the reduced embedded Trefftz solve, and the coupled
//! local/global block system.

use std::fmt;

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::basis::ElementBasis;
use crate::dg_forms::DgSystem;
use crate::embedding::{ElementEmbedding, GlobalEmbedding};
use crate::error::{Error, Result};
use crate::linalg::{mat_t_vec, mat_vec, orthonormalize_columns, sparse_solve, BlockMatrix};
use crate::local_ops::LocalOperator;

/// Relative residual accepted from the direct solver.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    StandardDg,
    EmbeddedTrefftz,
    BlockCoupled,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::StandardDg => "STANDARD_DG",
            Method::EmbeddedTrefftz => "EMBEDDED_TREFFTZ",
            Method::BlockCoupled => "BLOCK_COUPLED",
        })
    }
}

/// How the complement `L_h(K)` of the local Trefftz space is spanned in the
/// block system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplementRule {
    /// Leading right singular vectors of `A_K`.
    SvdComplement,
    /// Image of the test basis under the pseudo-inverse taken in the scaled
    /// monomial coefficient norm, orthonormalized.
    MinnormImage,
}

/// Coefficients over the full broken basis.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub coefficients: Vec<f64>,
    pub method: Method,
    pub ndof_full: usize,
    pub ndof_trefftz: Option<usize>,
    /// `(u_L, u_T)` in full coordinates, for the split methods.
    pub split: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn solve_standard_dg(sys: &DgSystem) -> Result<DiscreteSolution> {
    let u = sparse_solve(&sys.matrix, &sys.rhs, SOLVE_TOLERANCE, "standard DG system")?;
    Ok(DiscreteSolution {
        ndof_full: u.len(),
        coefficients: u,
        method: Method::StandardDg,
        ndof_trefftz: None,
        split: None,
    })
}

fn check_sizes(sys: &DgSystem, emb: &GlobalEmbedding) -> Result<()> {
    if sys.matrix.block_rows() != emb.elements.len() || sys.ndof() != emb.ndof_full() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} unknowns on {} elements, embedding has {} on {}",
            sys.ndof(),
            sys.matrix.block_rows(),
            emb.ndof_full(),
            emb.elements.len()
        )));
    }
    Ok(())
}

/// `T^T A_h T` with the facet-block sparsity of `A_h`.
pub fn reduced_matrix(sys: &DgSystem, emb: &GlobalEmbedding) -> BlockMatrix {
    let sizes = emb.trefftz_sizes();
    let mut out = BlockMatrix::new(&sizes, &sizes);
    for (&(i, j), a) in sys.matrix.blocks() {
        let ti = &emb.elements[i].trefftz;
        let tj = &emb.elements[j].trefftz;
        if ti.ncols() == 0 || tj.ncols() == 0 {
            continue;
        }
        let r = ti.transpose() * a * tj;
        out.add_block(i, j, &r);
    }
    out
}

/// Solves `(T^T A T) u_T = T^T (l - A u_L)` and returns `u = T u_T + u_L`.
pub fn solve_embedded_trefftz(sys: &DgSystem, emb: &GlobalEmbedding) -> Result<DiscreteSolution> {
    check_sizes(sys, emb)?;
    let au_l = sys.matrix.mul_vec(&emb.particular);
    let r: Vec<f64> = sys.rhs.iter().zip(&au_l).map(|(l, a)| l - a).collect();
    let rhs = emb.apply_transpose(&r);
    let red = reduced_matrix(sys, emb);
    let ut = sparse_solve(&red, &rhs, SOLVE_TOLERANCE, "reduced Trefftz system")?;
    let u_t = emb.apply(&ut);
    let u: Vec<f64> = u_t.iter().zip(&emb.particular).map(|(a, b)| a + b).collect();
    Ok(DiscreteSolution {
        ndof_full: u.len(),
        coefficients: u,
        method: Method::EmbeddedTrefftz,
        ndof_trefftz: Some(emb.ndof_trefftz()),
        split: Some((emb.particular.clone(), u_t)),
    })
}

/// Orthonormal basis of the local complement under `rule`.
pub fn complement_basis(
    e: &ElementEmbedding,
    basis: &ElementBasis,
    rule: ComplementRule,
) -> Result<Mat<f64>> {
    let vk = e.complement();
    match rule {
        ComplementRule::SvdComplement => Ok(vk),
        ComplementRule::MinnormImage => {
            if vk.ncols() == 0 {
                return Ok(vk);
            }
            // coefficient norm of the scaled monomial expansion: M = C C^T
            let c = basis.transform();
            let m = c * c.transpose();
            let llt = m.llt(Side::Lower).map_err(|err| {
                Error::LinearAlgebra(format!("element {}: monomial norm factorization: {err:?}", e.element))
            })?;
            let img = llt.solve(&vk);
            Ok(orthonormalize_columns(&img))
        }
    }
}

/// Assembles and solves the coupled system whose unknowns on each element are
/// the coordinates in `[L_K, T_K]`; local rows `U_k^T A_K`, global rows
/// `T^T A_h`.
pub fn solve_block_coupled(
    local_ops: &[LocalOperator],
    sys: &DgSystem,
    emb: &GlobalEmbedding,
    rule: ComplementRule,
    bases: &[ElementBasis],
) -> Result<DiscreteSolution> {
    check_sizes(sys, emb)?;
    let ne = emb.elements.len();
    if local_ops.len() != ne || bases.len() != ne {
        return Err(Error::DimensionMismatch(format!(
            "{} local operators and {} bases for {ne} elements",
            local_ops.len(),
            bases.len()
        )));
    }
    let n = emb.local_dim();
    let mut frames = Vec::with_capacity(ne);
    for (k, e) in emb.elements.iter().enumerate() {
        let l = complement_basis(e, &bases[k], rule)?;
        let f = Mat::from_fn(n, n, |i, j| {
            if j < l.ncols() {
                l[(i, j)]
            } else {
                e.trefftz[(i, j - l.ncols())]
            }
        });
        frames.push((l.ncols(), f));
    }

    let sizes = vec![n; ne];
    let mut mat = BlockMatrix::new(&sizes, &sizes);
    let mut rhs = vec![0.0; ne * n];
    for (k, e) in emb.elements.iter().enumerate() {
        let (kl, frame) = &frames[k];
        let uk = Mat::from_fn(e.left_singular.nrows(), *kl, |i, j| e.left_singular[(i, j)]);
        let local = uk.transpose() * &local_ops[k].matrix * frame;
        let mut blk = Mat::<f64>::zeros(n, n);
        for i in 0..*kl {
            for j in 0..n {
                blk[(i, j)] = local[(i, j)];
            }
        }
        mat.add_block(k, k, &blk);
        let lr = mat_t_vec(&uk, &local_ops[k].rhs);
        rhs[k * n..k * n + kl].copy_from_slice(&lr);
        let gr = mat_t_vec(&e.trefftz, &sys.rhs[k * n..(k + 1) * n]);
        rhs[k * n + kl..(k + 1) * n].copy_from_slice(&gr);
    }
    for (&(i, j), a) in sys.matrix.blocks() {
        let ti = &emb.elements[i].trefftz;
        if ti.ncols() == 0 {
            continue;
        }
        let kl = frames[i].0;
        let g = ti.transpose() * a * &frames[j].1;
        let blk = Mat::from_fn(n, n, |r, c| if r < kl { 0.0 } else { g[(r - kl, c)] });
        mat.add_block(i, j, &blk);
    }

    let c = sparse_solve(&mat, &rhs, SOLVE_TOLERANCE, "coupled block system")?;
    let mut u_l = vec![0.0; ne * n];
    let mut u_t = vec![0.0; ne * n];
    for k in 0..ne {
        let (kl, frame) = &frames[k];
        let ck = &c[k * n..(k + 1) * n];
        let mut cl = ck.to_vec();
        cl[*kl..].iter_mut().for_each(|v| *v = 0.0);
        let mut ct = ck.to_vec();
        ct[..*kl].iter_mut().for_each(|v| *v = 0.0);
        u_l[k * n..(k + 1) * n].copy_from_slice(&mat_vec(frame, &cl));
        u_t[k * n..(k + 1) * n].copy_from_slice(&mat_vec(frame, &ct));
    }
    let u: Vec<f64> = u_l.iter().zip(&u_t).map(|(a, b)| a + b).collect();
    Ok(DiscreteSolution {
        ndof_full: u.len(),
        coefficients: u,
        method: Method::BlockCoupled,
        ndof_trefftz: Some(emb.ndof_trefftz()),
        split: Some((u_l, u_t)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{BuiltinCase, Constant, PdeCoefficients};
    use crate::dg_forms::{assemble_global_system, default_sigma, FormKind};
    use crate::embedding::{build_embedding, RankRule};
    use crate::linalg::norm2;
    use crate::local_ops::{LocalSettings, OperatorKind};
    use crate::mesh::build_structured_mesh;
    use crate::space::DgSpace;
    use std::sync::Arc;

    fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        norm2(&d) / norm2(a).max(1e-300)
    }

    #[test]
    fn zero_data_gives_zero() {
        let space = DgSpace::new(build_structured_mesh(2).unwrap(), 3).unwrap();
        let c = BuiltinCase::ArExample
            .coefficients()
            .with_source(Arc::new(Constant(0.0)))
            .with_dirichlet(Arc::new(Constant(0.0)));
        let sys = assemble_global_system(FormKind::ArUpwind, &space, &c, 0.0).unwrap();
        assert!(solve_standard_dg(&sys).unwrap().coefficients.iter().all(|&v| v == 0.0));
        let (ops, emb) = build_embedding(&space, OperatorKind::AdvectionReaction, &c, &LocalSettings::default(), RankRule::default())
            .unwrap();
        assert!(solve_embedded_trefftz(&sys, &emb).unwrap().coefficients.iter().all(|&v| v == 0.0));
        let b = solve_block_coupled(&ops, &sys, &emb, ComplementRule::SvdComplement, space.bases()).unwrap();
        assert!(b.coefficients.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplace_embedded_matches_standard() {
        let space = DgSpace::new(build_structured_mesh(3).unwrap(), 2).unwrap();
        let c = PdeCoefficients::laplace_quadratic();
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, default_sigma(2)).unwrap();
        let dg = solve_standard_dg(&sys).unwrap();
        let (_, emb) = build_embedding(&space, OperatorKind::DiffusionAdvectionReaction, &c, &LocalSettings::default(), RankRule::default())
            .unwrap();
        let et = solve_embedded_trefftz(&sys, &emb).unwrap();
        assert!(rel_diff(&dg.coefficients, &et.coefficients) < 1e-8);
    }

    #[test]
    fn complement_rules_agree_on_sum_not_split() {
        let space = DgSpace::new(build_structured_mesh(4).unwrap(), 3).unwrap();
        let c = BuiltinCase::ArExample.coefficients();
        let sys = assemble_global_system(FormKind::ArUpwind, &space, &c, 0.0).unwrap();
        let (ops, emb) = build_embedding(&space, OperatorKind::AdvectionReaction, &c, &LocalSettings::default(), RankRule::default())
            .unwrap();
        let et = solve_embedded_trefftz(&sys, &emb).unwrap();
        let a = solve_block_coupled(&ops, &sys, &emb, ComplementRule::SvdComplement, space.bases()).unwrap();
        let b = solve_block_coupled(&ops, &sys, &emb, ComplementRule::MinnormImage, space.bases()).unwrap();
        assert!(rel_diff(&et.coefficients, &a.coefficients) < 1e-8);
        assert!(rel_diff(&et.coefficients, &b.coefficients) < 1e-8);
        let (la, _) = a.split.unwrap();
        let (lb, _) = b.split.unwrap();
        assert!(rel_diff(&la, &lb) > 1e-6);
    }

    #[test]
    fn local_rows_hold_for_embedded_solution() {
        let space = DgSpace::new(build_structured_mesh(4).unwrap(), 3).unwrap();
        let c = BuiltinCase::DarExample.coefficients();
        let sys = assemble_global_system(FormKind::DarSip, &space, &c, default_sigma(3)).unwrap();
        let (ops, emb) = build_embedding(&space, OperatorKind::DiffusionAdvectionReaction, &c, &LocalSettings::default(), RankRule::default())
            .unwrap();
        let et = solve_embedded_trefftz(&sys, &emb).unwrap();
        for (k, op) in ops.iter().enumerate() {
            let r: Vec<f64> = mat_vec(&op.matrix, space.local(&et.coefficients, k))
                .iter()
                .zip(&op.rhs)
                .map(|(a, b)| a - b)
                .collect();
            assert!(norm2(&r) <= 1e-8 * (1.0 + norm2(&op.rhs)));
        }
        assert_eq!(et.ndof_trefftz, Some(32 * 7));
    }
}
