//! Per-element operator matrices `A_K` and load vectors `l_K` that define the
//! local (weak or quasi-) Trefftz constraints.
//!
//! Rows are taken against an orthonormal basis of the test space, so the
//! dual norm of `A_K u` is the Euclidean norm of `matrix * coeffs`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use faer::Mat;

use crate::basis::{leading_dim, ElementBasis};
use crate::coefficients::{derivative_or_err, PdeCoefficients, ScalarField};
use crate::error::{Error, Result};
use crate::mesh::{ElementGeometry, Point};
use crate::poly::{MultiIndex, MultiIndexSet};
use crate::quadrature::{quadrature_rule, AxisBox, Domain, QuadratureRule};

/// Which local operator defines the Trefftz constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    /// `h^{1/2} (beta . grad v + gamma v)` tested against `P^{p-1}(K)`.
    AdvectionReaction,
    /// `h (-div(alpha grad v) + beta . grad v + gamma v)` tested against `P^{p-2}(K)`.
    DiffusionAdvectionReaction,
    /// Same operator restricted to a box `B_K` inside `K`, tested against `P^{p-2}(B_K)`.
    DiffusionBox,
    /// Scaled point derivatives `h^{3/2+|i|} D^i div(alpha grad v)(x_K)`, `|i| <= p-2`.
    QuasiTrefftzDiffusion,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 4] = [
        OperatorKind::AdvectionReaction,
        OperatorKind::DiffusionAdvectionReaction,
        OperatorKind::DiffusionBox,
        OperatorKind::QuasiTrefftzDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::AdvectionReaction => "AR",
            OperatorKind::DiffusionAdvectionReaction => "DAR",
            OperatorKind::DiffusionBox => "DAR_BOX",
            OperatorKind::QuasiTrefftzDiffusion => "QT_DIFFUSION",
        }
    }

    pub fn min_degree(self) -> usize {
        match self {
            OperatorKind::AdvectionReaction => 1,
            _ => 2,
        }
    }

    /// Order of the strong operator (1 for advection, 2 for diffusion).
    pub fn order(self) -> usize {
        match self {
            OperatorKind::AdvectionReaction => 1,
            _ => 2,
        }
    }

    /// Number of test functions (rows) for degree `p`.
    pub fn test_dim(self, p: usize) -> usize {
        leading_dim(p as isize - self.order() as isize)
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                what: "operator kind",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone)]
pub enum TestSpace {
    /// Leading orthonormal functions of `P^degree(K)`.
    Element { degree: usize },
    /// Orthonormal basis of `P^degree(B_K)`.
    Box { degree: usize, bx: AxisBox },
    /// One row per multi-index.
    PointDerivatives(MultiIndexSet),
}

#[derive(Debug, Clone, Copy)]
pub struct LocalSettings {
    /// Box side as a fraction of the element diameter.
    pub box_scale: f64,
    /// Volume quadrature exactness is `2p + extra_order`.
    pub extra_order: usize,
}

impl Default for LocalSettings {
    fn default() -> Self {
        LocalSettings {
            box_scale: 0.25,
            extra_order: 4,
        }
    }
}

/// Matrix representation of `A_K : V_h(K) -> Q_h(K)'` and the local load.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub kind: OperatorKind,
    pub element: usize,
    pub matrix: Mat<f64>,
    pub rhs: Vec<f64>,
    pub test_space: TestSpace,
}

impl LocalOperator {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn bounding_box(&self) -> Option<AxisBox> {
        match &self.test_space {
            TestSpace::Box { bx, .. } => Some(*bx),
            _ => None,
        }
    }
}

/// Builds `A_K` and `l_K` for one element.
pub fn assemble_local_operator(
    kind: OperatorKind,
    geom: &ElementGeometry,
    basis: &ElementBasis,
    coeffs: &PdeCoefficients,
    settings: &LocalSettings,
) -> Result<LocalOperator> {
    let p = basis.degree();
    if p < kind.min_degree() {
        return Err(Error::DegreeTooSmall {
            kind: kind.name(),
            degree: p,
            min: kind.min_degree(),
        });
    }
    let element = basis.element;
    let exactness = 2 * p + settings.extra_order;
    match kind {
        OperatorKind::AdvectionReaction => {
            let quad = quadrature_rule(Domain::Triangle(geom.vertices), exactness)?;
            let rows = kind.test_dim(p);
            let (matrix, rhs) = volume_operator(
                element,
                &quad,
                basis,
                |x| Ok(basis.values(x)[..rows].to_vec()),
                rows,
                geom.diameter.sqrt(),
                coeffs,
                false,
            )?;
            Ok(LocalOperator {
                kind,
                element,
                matrix,
                rhs,
                test_space: TestSpace::Element { degree: p - 1 },
            })
        }
        OperatorKind::DiffusionAdvectionReaction => {
            require_diffusion(coeffs, kind)?;
            let quad = quadrature_rule(Domain::Triangle(geom.vertices), exactness)?;
            let rows = kind.test_dim(p);
            let (matrix, rhs) = volume_operator(
                element,
                &quad,
                basis,
                |x| Ok(basis.values(x)[..rows].to_vec()),
                rows,
                geom.diameter,
                coeffs,
                true,
            )?;
            Ok(LocalOperator {
                kind,
                element,
                matrix,
                rhs,
                test_space: TestSpace::Element { degree: p - 2 },
            })
        }
        OperatorKind::DiffusionBox => {
            require_diffusion(coeffs, kind)?;
            let bx = compute_box(geom, settings.box_scale)?;
            let test = ElementBasis::on_box(element, &bx, p - 2)?;
            let quad = quadrature_rule(Domain::Box(bx), exactness)?;
            let (matrix, rhs) = volume_operator(
                element,
                &quad,
                basis,
                |x| Ok(test.values(x)),
                test.dim(),
                bx.side(),
                coeffs,
                true,
            )?;
            Ok(LocalOperator {
                kind,
                element,
                matrix,
                rhs,
                test_space: TestSpace::Box { degree: p - 2, bx },
            })
        }
        OperatorKind::QuasiTrefftzDiffusion => {
            let alpha = require_diffusion(coeffs, kind)?;
            quasi_trefftz_operator(element, geom, basis, alpha.as_ref(), coeffs.source.as_ref())
        }
    }
}

fn require_diffusion(
    coeffs: &PdeCoefficients,
    kind: OperatorKind,
) -> Result<&crate::coefficients::Field> {
    coeffs.alpha.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} operator needs a diffusion coefficient (case {})",
            kind.name(),
            coeffs.name
        ))
    })
}

/// `A[i, j] = int scale * (L phi_j) q_i`, `l[i] = int scale * f q_i`, where
/// `L v = -(alpha lap v + grad alpha . grad v) + beta . grad v + gamma v`.
#[allow(clippy::too_many_arguments)]
fn volume_operator<T>(
    element: usize,
    quad: &QuadratureRule,
    basis: &ElementBasis,
    test: T,
    rows: usize,
    scale: f64,
    coeffs: &PdeCoefficients,
    diffusion: bool,
) -> Result<(Mat<f64>, Vec<f64>)>
where
    T: Fn(Point) -> Result<Vec<f64>>,
{
    let n = basis.dim();
    let mut a = Mat::<f64>::zeros(rows, n);
    let mut rhs = vec![0.0; rows];
    let mut strong = vec![0.0; n];
    for (x, w) in quad.iter() {
        let q = test(x)?;
        let beta = coeffs.beta_at(x);
        let gamma = coeffs.gamma.value(x);
        if diffusion {
            let e = basis.eval(x);
            let alpha = coeffs.alpha_at(x);
            if alpha <= 0.0 {
                return Err(Error::NonPositiveDiffusion {
                    element,
                    x: x[0],
                    y: x[1],
                    value: alpha,
                });
            }
            let ga = coeffs.alpha_gradient(x)?;
            for j in 0..n {
                let g = e.gradients[j];
                strong[j] = -(alpha * e.laplacian(j) + ga[0] * g[0] + ga[1] * g[1])
                    + beta[0] * g[0]
                    + beta[1] * g[1]
                    + gamma * e.values[j];
            }
        } else {
            let (v, g) = basis.values_gradients(x);
            for j in 0..n {
                strong[j] = beta[0] * g[j][0] + beta[1] * g[j][1] + gamma * v[j];
            }
        }
        let f = coeffs.source.value(x);
        for i in 0..rows {
            let wq = w * scale * q[i];
            for j in 0..n {
                a[(i, j)] += wq * strong[j];
            }
            rhs[i] += wq * f;
        }
    }
    Ok((a, rhs))
}

/// `D^i div(alpha grad w)(x)` by the Leibniz rule on the expanded form
/// `alpha lap w + grad alpha . grad w`.
///
/// `w_derivative(j)` must return `D^j w(x)` for `|j| <= |i| + 2`.
pub fn leibniz_point_derivative<W>(
    i: MultiIndex,
    w_derivative: W,
    alpha: &dyn ScalarField,
    x: Point,
) -> Result<f64>
where
    W: Fn(MultiIndex) -> f64,
{
    let mut s = 0.0;
    for l in i.lower_set() {
        let rest = i.checked_sub(l).expect("l <= i");
        let c = i.binomial(l);
        let a = derivative_or_err(alpha, l, x, "alpha")?;
        let lap = w_derivative(rest.add(MultiIndex(2, 0))) + w_derivative(rest.add(MultiIndex(0, 2)));
        let mut term = a * lap;
        for d in 0..2 {
            let e = MultiIndex::unit(d);
            let ad = derivative_or_err(alpha, l.add(e), x, "alpha")?;
            term += ad * w_derivative(rest.add(e));
        }
        s += c * term;
    }
    Ok(s)
}

fn quasi_trefftz_operator(
    element: usize,
    geom: &ElementGeometry,
    basis: &ElementBasis,
    alpha: &dyn ScalarField,
    source: &dyn ScalarField,
) -> Result<LocalOperator> {
    let p = basis.degree();
    let set = MultiIndexSet::graded((p - 2) as u32);
    let xk = geom.centroid;
    let h = geom.diameter;
    let n = basis.dim();
    let alpha0 = derivative_or_err(alpha, MultiIndex::ZERO, xk, "alpha")?;
    if alpha0 <= 0.0 {
        return Err(Error::NonPositiveDiffusion {
            element,
            x: xk[0],
            y: xk[1],
            value: alpha0,
        });
    }
    // every basis derivative up to order p at the expansion point
    let mut table: HashMap<MultiIndex, Vec<f64>> = HashMap::new();
    for d in MultiIndexSet::graded(p as u32).iter() {
        table.insert(d, basis.derivatives(d, xk));
    }
    let lookup = |d: MultiIndex, j: usize| table.get(&d).map_or(0.0, |v| v[j]);
    let mut a = Mat::<f64>::zeros(set.len(), n);
    let mut rhs = vec![0.0; set.len()];
    for (r, i) in set.iter().enumerate() {
        let scale = h.powf(1.5 + f64::from(i.order()));
        for j in 0..n {
            a[(r, j)] = scale * leibniz_point_derivative(i, |d| lookup(d, j), alpha, xk)?;
        }
        // the rows enforce div(alpha grad u) = -f, consistent with -div(alpha grad u) = f
        rhs[r] = -scale * derivative_or_err(source, i, xk, "source")?;
    }
    Ok(LocalOperator {
        kind: OperatorKind::QuasiTrefftzDiffusion,
        element,
        matrix: a,
        rhs,
        test_space: TestSpace::PointDerivatives(set),
    })
}

/// Square centered at the incenter with side `scale * h_K`, shrunk by 0.9
/// until its corners lie in the closed triangle.
pub fn compute_box(geom: &ElementGeometry, scale: f64) -> Result<AxisBox> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "box scale must be positive, got {scale}"
        )));
    }
    let mut side = scale * geom.diameter;
    for _ in 0..=50 {
        let bx = AxisBox::square(geom.incenter, side);
        if bx.corners().iter().all(|&c| geom.contains(c, 1e-12)) {
            return Ok(bx);
        }
        side *= 0.9;
    }
    Err(Error::DegenerateElement {
        element: usize::MAX,
        reason: "no box around the incenter fits after 50 shrink steps".into(),
    })
}
