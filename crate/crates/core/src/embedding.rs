//! Weak Trefftz spaces as SVD kernels of the local operators, particular
//! solutions through the pseudo-inverse, and their block-diagonal assembly.

use std::io::Write;

use faer::Mat;
use log::warn;
use rayon::prelude::*;

use crate::coefficients::PdeCoefficients;
use crate::error::{Error, Result};
use crate::linalg::{full_svd, mat_t_vec, mat_vec};
use crate::local_ops::{assemble_local_operator, LocalOperator, LocalSettings, OperatorKind};
use crate::mesh::Mesh2D;
use crate::space::DgSpace;

/// Relative guard `sigma_k > guard * sigma_1` under [`RankRule::FullRowRank`].
pub const FULL_RANK_GUARD: f64 = 1e-9;

/// How many singular directions are treated as the local problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankRule {
    /// Rank equals the row count. When the guard fails, `fallback` selects
    /// between the threshold rule (with a warning) and an error.
    FullRowRank { fallback: bool },
    /// `k = #{ sigma_i >= tau * sigma_1 }`.
    Threshold(f64),
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule::FullRowRank { fallback: true }
    }
}

/// Kernel basis, particular solution and spectrum of one `A_K`.
#[derive(Debug, Clone)]
pub struct ElementEmbedding {
    pub element: usize,
    /// `n x n_T`, orthonormal columns spanning `ker A_K`.
    pub trefftz: Mat<f64>,
    /// Minimum-norm solution of `A_K u = l_K`.
    pub particular: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Full right singular vectors (`n x n`), leading `rank` columns span the complement.
    pub right_singular: Mat<f64>,
    /// Full left singular vectors (`m x m`).
    pub left_singular: Mat<f64>,
    /// Set when the full-row-rank guard failed and the threshold rule was used.
    pub downgraded: bool,
}

impl ElementEmbedding {
    pub fn local_dim(&self) -> usize {
        self.trefftz.nrows()
    }

    pub fn n_trefftz(&self) -> usize {
        self.trefftz.ncols()
    }

    /// Leading right singular vectors: orthonormal basis of `(ker A_K)^perp`.
    pub fn complement(&self) -> Mat<f64> {
        let n = self.local_dim();
        Mat::from_fn(n, self.rank, |i, j| self.right_singular[(i, j)])
    }

    /// `sigma_k / sigma_1` over the used rank (1 when the rank is zero).
    pub fn sigma_min_rel(&self) -> f64 {
        if self.rank == 0 {
            1.0
        } else {
            self.singular_values[self.rank - 1] / self.singular_values[0]
        }
    }
}

fn threshold_rank(s: &[f64], tau: f64) -> usize {
    match s.first() {
        Some(&s1) if s1 > 0.0 => s.iter().filter(|&&si| si > 0.0 && si >= tau * s1).count(),
        _ => 0,
    }
}

/// SVD of `A_K`; kernel from the trailing right singular vectors and the
/// particular solution `V_k S_k^{-1} U_k^T l_K`.
pub fn compute_embedding(op: &LocalOperator, rule: RankRule) -> Result<ElementEmbedding> {
    let a = &op.matrix;
    let (m, n) = (a.nrows(), a.ncols());
    let svd = full_svd(a)?;
    let s = svd.s;
    let mut downgraded = false;
    let rank = match rule {
        RankRule::Threshold(tau) => threshold_rank(&s, tau),
        RankRule::FullRowRank { fallback } => {
            let ok = m == 0 || (m <= n && s[0] > 0.0 && s[m - 1] > FULL_RANK_GUARD * s[0]);
            if ok {
                m
            } else if fallback {
                let k = threshold_rank(&s, FULL_RANK_GUARD);
                warn!(
                    "element {}: {} operator is rank deficient ({} of {} rows), using threshold rule",
                    op.element, op.kind, k, m
                );
                downgraded = true;
                k
            } else {
                return Err(Error::RankDeficient {
                    element: op.element,
                    sigma: s,
                });
            }
        }
    };
    let trefftz = Mat::from_fn(n, n - rank, |i, j| svd.v[(i, rank + j)]);
    let mut particular = vec![0.0; n];
    for c in 0..rank {
        let coef = (0..m).map(|i| svd.u[(i, c)] * op.rhs[i]).sum::<f64>() / s[c];
        for (r, p) in particular.iter_mut().enumerate() {
            *p += coef * svd.v[(r, c)];
        }
    }
    Ok(ElementEmbedding {
        element: op.element,
        trefftz,
        particular,
        singular_values: s,
        rank,
        right_singular: svd.v,
        left_singular: svd.u,
        downgraded,
    })
}

/// Block-diagonal prolongation `T : R^{N_T} -> R^N` and the concatenated
/// particular solution.
#[derive(Debug, Clone)]
pub struct GlobalEmbedding {
    pub elements: Vec<ElementEmbedding>,
    trefftz_offsets: Vec<usize>,
    local_dim: usize,
    pub particular: Vec<f64>,
}

impl GlobalEmbedding {
    pub fn ndof_full(&self) -> usize {
        self.local_dim * self.elements.len()
    }

    pub fn ndof_trefftz(&self) -> usize {
        *self.trefftz_offsets.last().unwrap()
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn trefftz_range(&self, k: usize) -> std::ops::Range<usize> {
        self.trefftz_offsets[k]..self.trefftz_offsets[k + 1]
    }

    pub fn trefftz_sizes(&self) -> Vec<usize> {
        self.elements.iter().map(|e| e.n_trefftz()).collect()
    }

    /// `T u_T`.
    pub fn apply(&self, ut: &[f64]) -> Vec<f64> {
        assert_eq!(ut.len(), self.ndof_trefftz());
        let n = self.local_dim;
        let mut u = vec![0.0; self.ndof_full()];
        for (k, e) in self.elements.iter().enumerate() {
            let local = mat_vec(&e.trefftz, &ut[self.trefftz_range(k)]);
            u[k * n..(k + 1) * n].copy_from_slice(&local);
        }
        u
    }

    /// `T^T v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.ndof_full());
        let n = self.local_dim;
        let mut out = Vec::with_capacity(self.ndof_trefftz());
        for (k, e) in self.elements.iter().enumerate() {
            out.extend(mat_t_vec(&e.trefftz, &v[k * n..(k + 1) * n]));
        }
        out
    }

    pub fn rho_max(&self, ops: &[LocalOperator]) -> f64 {
        ops.iter()
            .zip(&self.elements)
            .map(|(op, e)| {
                let at = &op.matrix * &e.trefftz;
                at.norm_l2() / (1.0 + op.matrix.norm_l2())
            })
            .fold(0.0, f64::max)
    }

    /// Singular values as CSV: `element_id,sigma_index,sigma_value`.
    pub fn write_sigma_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "element_id,sigma_index,sigma_value")?;
        for e in &self.elements {
            for (i, s) in e.singular_values.iter().enumerate() {
                writeln!(out, "{},{},{:.17e}", e.element, i, s)?;
            }
        }
        Ok(())
    }
}

/// Gathers per-element embeddings in element order.
pub fn assemble_global_embedding(
    mesh: &Mesh2D,
    per_element: Vec<ElementEmbedding>,
) -> Result<GlobalEmbedding> {
    if per_element.len() != mesh.num_elements() {
        return Err(Error::DimensionMismatch(format!(
            "{} element embeddings for {} elements",
            per_element.len(),
            mesh.num_elements()
        )));
    }
    let local_dim = per_element.first().map_or(0, |e| e.local_dim());
    let mut offsets = vec![0];
    let mut particular = Vec::with_capacity(local_dim * per_element.len());
    for (k, e) in per_element.iter().enumerate() {
        if e.local_dim() != local_dim || e.particular.len() != local_dim {
            return Err(Error::DimensionMismatch(format!(
                "element {k}: local dimension {} differs from {local_dim}",
                e.local_dim()
            )));
        }
        if e.element != k {
            return Err(Error::DimensionMismatch(format!(
                "embedding for element {} at position {k}",
                e.element
            )));
        }
        offsets.push(offsets.last().unwrap() + e.n_trefftz());
        particular.extend_from_slice(&e.particular);
    }
    Ok(GlobalEmbedding {
        elements: per_element,
        trefftz_offsets: offsets,
        local_dim,
        particular,
    })
}

/// Local operators and embedding over a whole space, computed in parallel.
pub fn build_embedding(
    space: &DgSpace,
    kind: OperatorKind,
    coeffs: &PdeCoefficients,
    settings: &LocalSettings,
    rule: RankRule,
) -> Result<(Vec<LocalOperator>, GlobalEmbedding)> {
    let pairs = (0..space.num_elements())
        .into_par_iter()
        .map(|k| {
            let g = &space.mesh.geometries()[k];
            let op = assemble_local_operator(kind, g, space.basis(k), coeffs, settings)?;
            let emb = compute_embedding(&op, rule)?;
            Ok((op, emb))
        })
        .collect::<Result<Vec<_>>>()?;
    let (ops, embs): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let global = assemble_global_embedding(&space.mesh, embs)?;
    Ok((ops, global))
}
