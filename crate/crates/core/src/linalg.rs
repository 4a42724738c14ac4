//! Dense helpers over `faer` and an element-block sparse matrix.

use std::collections::BTreeMap;
use std::io::Write;

use faer::sparse::{SparseColMat, Triplet};
use faer::linalg::solvers::Solve;
use faer::{Col, Mat};

use crate::error::{Error, Result};

/// Full SVD `A = U diag(s) V^T` with singular values sorted descending.
pub struct FullSvd {
    pub u: Mat<f64>,
    pub s: Vec<f64>,
    pub v: Mat<f64>,
}

pub fn full_svd(a: &Mat<f64>) -> Result<FullSvd> {
    let (m, n) = (a.nrows(), a.ncols());
    if m == 0 || n == 0 {
        return Ok(FullSvd {
            u: Mat::identity(m, m),
            s: Vec::new(),
            v: Mat::identity(n, n),
        });
    }
    let svd = a
        .svd()
        .map_err(|e| Error::LinearAlgebra(format!("SVD failed: {e:?}")))?;
    let k = m.min(n);
    let raw: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| raw[j].total_cmp(&raw[i]));
    let u_in = svd.U();
    let v_in = svd.V();
    // sorted columns first, then the remaining (null) columns in their original order
    let mut u_cols = order.clone();
    u_cols.extend(k..m);
    let mut v_cols = order.clone();
    v_cols.extend(k..n);
    let u = Mat::from_fn(m, m, |i, j| u_in[(i, u_cols[j])]);
    let v = Mat::from_fn(n, n, |i, j| v_in[(i, v_cols[j])]);
    let s = order.iter().map(|&i| raw[i]).collect();
    Ok(FullSvd { u, s, v })
}

/// Orthonormal basis for the column span of `a` (full column rank assumed).
pub fn orthonormalize_columns(a: &Mat<f64>) -> Mat<f64> {
    if a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    a.qr().compute_thin_Q()
}

pub fn frobenius(a: &Mat<f64>) -> f64 {
    a.norm_l2()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn mat_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += a[(i, j)] * xj;
        }
    }
    y
}

pub fn mat_t_vec(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    assert_eq!(a.nrows(), x.len());
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)] * x[i]).sum())
        .collect()
}

/// Sparse matrix stored as dense blocks on a block-row / block-column grid.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    row_offsets: Vec<usize>,
    col_offsets: Vec<usize>,
    blocks: BTreeMap<(usize, usize), Mat<f64>>,
}

impl BlockMatrix {
    pub fn new(row_sizes: &[usize], col_sizes: &[usize]) -> Self {
        BlockMatrix {
            row_offsets: offsets(row_sizes),
            col_offsets: offsets(col_sizes),
            blocks: BTreeMap::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        *self.row_offsets.last().unwrap()
    }

    pub fn ncols(&self) -> usize {
        *self.col_offsets.last().unwrap()
    }

    pub fn block_rows(&self) -> usize {
        self.row_offsets.len() - 1
    }

    pub fn block_cols(&self) -> usize {
        self.col_offsets.len() - 1
    }

    pub fn row_offset(&self, i: usize) -> usize {
        self.row_offsets[i]
    }

    pub fn col_offset(&self, j: usize) -> usize {
        self.col_offsets[j]
    }

    pub fn row_size(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn col_size(&self, j: usize) -> usize {
        self.col_offsets[j + 1] - self.col_offsets[j]
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&Mat<f64>> {
        self.blocks.get(&(i, j))
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&(usize, usize), &Mat<f64>)> {
        self.blocks.iter()
    }

    /// Adds `m` into block `(i, j)`.
    pub fn add_block(&mut self, i: usize, j: usize, m: &Mat<f64>) {
        assert_eq!(m.nrows(), self.row_size(i));
        assert_eq!(m.ncols(), self.col_size(j));
        match self.blocks.get_mut(&(i, j)) {
            Some(b) => *b += m,
            None => {
                self.blocks.insert((i, j), m.clone());
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (&(i, j), b) in &self.blocks {
            let r0 = self.row_offsets[i];
            let c0 = self.col_offsets[j];
            for c in 0..b.ncols() {
                let xc = x[c0 + c];
                if xc == 0.0 {
                    continue;
                }
                for r in 0..b.nrows() {
                    y[r0 + r] += b[(r, c)] * xc;
                }
            }
        }
        y
    }

    pub fn transpose(&self) -> BlockMatrix {
        BlockMatrix {
            row_offsets: self.col_offsets.clone(),
            col_offsets: self.row_offsets.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(&(i, j), b)| ((j, i), b.transpose().to_owned()))
                .collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks
            .values()
            .map(|b| b.squared_norm_l2())
            .sum::<f64>()
            .sqrt()
    }

    /// Dense copy (for small systems and tests).
    pub fn to_dense(&self) -> Mat<f64> {
        let mut d = Mat::zeros(self.nrows(), self.ncols());
        for (&(i, j), b) in &self.blocks {
            let r0 = self.row_offsets[i];
            let c0 = self.col_offsets[j];
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    d[(r0 + r, c0 + c)] += b[(r, c)];
                }
            }
        }
        d
    }

    pub fn to_csc(&self) -> Result<SparseColMat<usize, f64>> {
        let mut triplets = Vec::new();
        for (&(i, j), b) in &self.blocks {
            let r0 = self.row_offsets[i];
            let c0 = self.col_offsets[j];
            for c in 0..b.ncols() {
                for r in 0..b.nrows() {
                    let v = b[(r, c)];
                    if v != 0.0 {
                        triplets.push(Triplet::new(r0 + r, c0 + c, v));
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows(), self.ncols(), &triplets)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly failed: {e:?}")))
    }

    /// Coordinate text export: one `row col value` line per stored nonzero.
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (&(i, j), b) in &self.blocks {
            let r0 = self.row_offsets[i];
            let c0 = self.col_offsets[j];
            for r in 0..b.nrows() {
                for c in 0..b.ncols() {
                    let v = b[(r, c)];
                    if v != 0.0 {
                        writeln!(out, "{} {} {:.17e}", r0 + r, c0 + c, v)?;
                    }
                }
            }
        }
        Ok(())
    }
}

fn offsets(sizes: &[usize]) -> Vec<usize> {
    let mut o = Vec::with_capacity(sizes.len() + 1);
    o.push(0);
    for s in sizes {
        o.push(o.last().unwrap() + s);
    }
    o
}

/// Solves `A x = b` by sparse LU with one step of iterative refinement and
/// checks the relative residual against `tol`.
pub fn sparse_solve(a: &BlockMatrix, b: &[f64], tol: f64, context: &str) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{context}: system is {}x{}, rhs has {} entries",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let b_norm = norm2(b);
    if n == 0 || b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let csc = a.to_csc()?;
    let lu = csc.sp_lu().map_err(|e| Error::SingularSystem {
        context: context.to_string(),
        detail: format!("sparse LU failed: {e:?}"),
    })?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let col = Col::<f64>::from_fn(n, |i| rhs[i]);
        let x = lu.solve(&col);
        (0..n).map(|i| x[i]).collect()
    };
    let mut x = solve(b);
    let residual = |x: &[f64]| -> (Vec<f64>, f64) {
        let ax = a.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rn = norm2(&r) / b_norm;
        (r, rn)
    };
    let (r, mut rel) = residual(&x);
    if rel.is_finite() && rel > 1e-14 {
        let dx = solve(&r);
        let refined: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let (_, rel2) = residual(&refined);
        if rel2 < rel {
            x = refined;
            rel = rel2;
        }
    }
    if !rel.is_finite() || rel > tol {
        // lower bound on the 1-norm condition number: |A|_1 |x|_1 / |b|_1
        let a_norm1 = column_norm1_max(&csc);
        let x1: f64 = x.iter().map(|v| v.abs()).sum();
        let b1: f64 = b.iter().map(|v| v.abs()).sum();
        return Err(Error::SingularSystem {
            context: context.to_string(),
            detail: format!(
                "relative residual {rel:e} exceeds {tol:e}; condition estimate >= {:e}",
                a_norm1 * x1 / b1
            ),
        });
    }
    Ok(x)
}

fn column_norm1_max(a: &SparseColMat<usize, f64>) -> f64 {
    let a = a.as_ref();
    (0..a.ncols())
        .map(|j| a.val_of_col(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
