//! L2-orthonormal polynomial bases on triangles and boxes.
//!
//! Each basis is built from monomials in the scaled variable
//! `(x - center) / scale` and orthonormalized by a Cholesky factorization of
//! their Gram matrix, repeated once to clean up rounding. The transform is
//! lower triangular, so the first `dim P^q` functions of a degree-`p` basis
//! span `P^q` and the first function is the constant `1/sqrt(|K|)`.

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Point};
use crate::poly::{monomial_derivative, poly_dim, MultiIndex, MultiIndexSet};
use crate::quadrature::{quadrature_rule, AxisBox, Domain, QuadratureRule};

#[derive(Debug, Clone)]
pub struct ElementBasis {
    pub element: usize,
    degree: usize,
    exponents: Vec<MultiIndex>,
    center: Point,
    scale: f64,
    /// `phi_i = sum_j coeffs[(i, j)] m_j`, lower triangular.
    coeffs: Mat<f64>,
    /// Inverse of `coeffs`: `m_i = sum_j monomial_factor[(i, j)] phi_j`.
    monomial_factor: Mat<f64>,
}

/// Values, gradients and Hessians of every basis function at one point.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
    pub hessians: Vec<[[f64; 2]; 2]>,
}

impl BasisEval {
    pub fn laplacian(&self, j: usize) -> f64 {
        self.hessians[j][0][0] + self.hessians[j][1][1]
    }
}

impl ElementBasis {
    /// Orthonormal basis of `P^degree` in `L2` of the domain integrated by
    /// `quad` (which must be exact to degree `2 * degree`).
    pub fn new(
        element: usize,
        degree: usize,
        center: Point,
        scale: f64,
        quad: &QuadratureRule,
    ) -> Result<Self> {
        let exponents: Vec<MultiIndex> = MultiIndexSet::graded(degree as u32).iter().collect();
        let n = exponents.len();
        let mut basis = ElementBasis {
            element,
            degree,
            exponents,
            center,
            scale,
            coeffs: Mat::identity(n, n),
            monomial_factor: Mat::identity(n, n),
        };
        for _ in 0..2 {
            let gram = basis.gram(quad);
            let llt = gram.llt(Side::Lower).map_err(|e| Error::DegenerateElement {
                element,
                reason: format!("basis Gram matrix not positive definite: {e:?}"),
            })?;
            let l = llt.L().to_owned();
            let mut l_inv = Mat::<f64>::identity(n, n);
            faer::linalg::triangular_solve::solve_lower_triangular_in_place(
                l.as_ref(),
                l_inv.as_mut(),
                faer::Par::Seq,
            );
            basis.coeffs = &l_inv * &basis.coeffs;
            basis.monomial_factor = &basis.monomial_factor * &l;
        }
        Ok(basis)
    }

    /// Basis on a triangle, centered at the centroid and scaled by the diameter.
    pub fn on_triangle(element: usize, geom: &ElementGeometry, degree: usize) -> Result<Self> {
        let quad = quadrature_rule(Domain::Triangle(geom.vertices), 2 * degree)?;
        Self::new(element, degree, geom.centroid, geom.diameter, &quad)
    }

    /// Basis on an axis-aligned box, centered at the box center and scaled by its side.
    pub fn on_box(element: usize, bx: &AxisBox, degree: usize) -> Result<Self> {
        let quad = quadrature_rule(Domain::Box(*bx), 2 * degree)?;
        Self::new(element, degree, bx.center(), bx.side(), &quad)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[MultiIndex] {
        &self.exponents
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Lower-triangular map from scaled monomials to the orthonormal basis.
    pub fn transform(&self) -> &Mat<f64> {
        &self.coeffs
    }

    fn scaled(&self, x: Point) -> [f64; 2] {
        [
            (x[0] - self.center[0]) / self.scale,
            (x[1] - self.center[1]) / self.scale,
        ]
    }

    /// Gram matrix of the current basis functions under `quad`.
    pub fn gram(&self, quad: &QuadratureRule) -> Mat<f64> {
        let n = self.dim();
        let mut g = Mat::<f64>::zeros(n, n);
        for (x, w) in quad.iter() {
            let v = self.values(x);
            for i in 0..n {
                let wi = w * v[i];
                for j in 0..=i {
                    g[(i, j)] += wi * v[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        g
    }

    /// Gram matrix of the raw scaled monomials, `F F^T` with `F` the inverse
    /// transform.
    pub fn monomial_gram(&self) -> Mat<f64> {
        &self.monomial_factor * self.monomial_factor.transpose()
    }

    fn combine(&self, mono: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.coeffs[(i, j)] * mono[j];
            }
            out[i] = s;
        }
    }

    /// `D^d phi_j(x)` for every basis function.
    pub fn derivatives(&self, d: MultiIndex, x: Point) -> Vec<f64> {
        let xi = self.scaled(x);
        let factor = self.scale.powi(-(d.order() as i32));
        let mono: Vec<f64> = self
            .exponents
            .iter()
            .map(|&e| factor * monomial_derivative(e, d, xi))
            .collect();
        let mut out = vec![0.0; self.dim()];
        self.combine(&mono, &mut out);
        out
    }

    pub fn values(&self, x: Point) -> Vec<f64> {
        self.derivatives(MultiIndex::ZERO, x)
    }

    /// Values and gradients only.
    pub fn values_gradients(&self, x: Point) -> (Vec<f64>, Vec<[f64; 2]>) {
        let v = self.values(x);
        let dx = self.derivatives(MultiIndex(1, 0), x);
        let dy = self.derivatives(MultiIndex(0, 1), x);
        (v, dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect())
    }

    /// Exact polynomial evaluation; `x` may lie outside the element.
    pub fn eval(&self, x: Point) -> BasisEval {
        let (values, gradients) = self.values_gradients(x);
        let dxx = self.derivatives(MultiIndex(2, 0), x);
        let dxy = self.derivatives(MultiIndex(1, 1), x);
        let dyy = self.derivatives(MultiIndex(0, 2), x);
        let hessians = (0..self.dim())
            .map(|j| [[dxx[j], dxy[j]], [dxy[j], dyy[j]]])
            .collect();
        BasisEval {
            values,
            gradients,
            hessians,
        }
    }

    /// Value at `x` of the function with coefficient vector `c`.
    pub fn eval_function(&self, c: &[f64], x: Point) -> f64 {
        self.values(x).iter().zip(c).map(|(a, b)| a * b).sum()
    }
}

/// Convenience wrapper matching the other free-function entry points.
pub fn eval_basis(basis: &ElementBasis, x: Point) -> BasisEval {
    basis.eval(x)
}

/// `L2` projection coefficients of `f` onto the span of `basis`.
pub fn l2_project<F: Fn(Point) -> f64>(
    f: F,
    basis: &ElementBasis,
    quad: &QuadratureRule,
) -> Vec<f64> {
    let mut c = vec![0.0; basis.dim()];
    for (x, w) in quad.iter() {
        let fx = f(x);
        if fx == 0.0 {
            continue;
        }
        for (ci, phi) in c.iter_mut().zip(basis.values(x)) {
            *ci += w * fx * phi;
        }
    }
    c
}

/// Number of leading basis functions that span `P^q`.
pub fn leading_dim(q: isize) -> usize {
    if q < 0 {
        0
    } else {
        poly_dim(q as usize)
    }
}
