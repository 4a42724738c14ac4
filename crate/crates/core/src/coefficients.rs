//! PDE data as evaluable fields with partial-derivative oracles, and the
//! built-in manufactured-solution cases.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Point;
use crate::poly::{MultiIndex, Polynomial};

/// Scalar field on the plane. `derivative(MultiIndex::ZERO, x)` is the value.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: Point) -> f64;

    /// `D^i f(x)`, or `None` when no oracle of that order exists.
    fn derivative(&self, i: MultiIndex, x: Point) -> Option<f64> {
        (i == MultiIndex::ZERO).then(|| self.value(x))
    }

    /// `false` for fields whose derivatives are finite-difference estimates.
    fn exact_derivatives(&self) -> bool {
        true
    }
}

pub type Field = Arc<dyn ScalarField>;

pub(crate) fn derivative_or_err(f: &dyn ScalarField, i: MultiIndex, x: Point, what: &str) -> Result<f64> {
    f.derivative(i, x)
        .ok_or_else(|| Error::MissingDerivative(format!("{what}: order ({}, {})", i.0, i.1)))
}

/// Gradient from the derivative oracle.
pub fn gradient(f: &dyn ScalarField, x: Point) -> Option<[f64; 2]> {
    Some([
        f.derivative(MultiIndex(1, 0), x)?,
        f.derivative(MultiIndex(0, 1), x)?,
    ])
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn value(&self, _: Point) -> f64 {
        self.0
    }
    fn derivative(&self, i: MultiIndex, _: Point) -> Option<f64> {
        Some(if i == MultiIndex::ZERO { self.0 } else { 0.0 })
    }
}

impl ScalarField for Polynomial {
    fn value(&self, x: Point) -> f64 {
        self.eval(x)
    }
    fn derivative(&self, i: MultiIndex, x: Point) -> Option<f64> {
        Some(Polynomial::derivative(self, i, x))
    }
}

/// Field of the form `g(d . x)` with closed-form derivatives of the profile `g`.
pub struct Ridge {
    direction: [f64; 2],
    profile: Box<dyn Fn(u32, f64) -> f64 + Send + Sync>,
}

impl Ridge {
    /// `profile(n, s)` must return the `n`-th derivative of `g` at `s`.
    pub fn new<G>(direction: [f64; 2], profile: G) -> Self
    where
        G: Fn(u32, f64) -> f64 + Send + Sync + 'static,
    {
        Ridge {
            direction,
            profile: Box::new(profile),
        }
    }

    /// `sin(freq * (d . x))`.
    pub fn sine(direction: [f64; 2], freq: f64) -> Self {
        Ridge::new(direction, move |n, s| {
            freq.powi(n as i32) * (freq * s + f64::from(n) * PI / 2.0).sin()
        })
    }
}

impl ScalarField for Ridge {
    fn value(&self, x: Point) -> f64 {
        (self.profile)(0, self.direction[0] * x[0] + self.direction[1] * x[1])
    }
    fn derivative(&self, i: MultiIndex, x: Point) -> Option<f64> {
        let s = self.direction[0] * x[0] + self.direction[1] * x[1];
        let scale = self.direction[0].powi(i.0 as i32) * self.direction[1].powi(i.1 as i32);
        if scale == 0.0 {
            return Some(0.0);
        }
        Some(scale * (self.profile)(i.order(), s))
    }
}

/// Closure-backed field whose derivatives come from central finite
/// differences (reduced accuracy, orders up to 2).
pub struct FiniteDifference<F> {
    f: F,
    step: f64,
}

impl<F: Fn(Point) -> f64 + Send + Sync> FiniteDifference<F> {
    pub fn new(f: F) -> Self {
        FiniteDifference { f, step: 1e-4 }
    }
}

impl<F: Fn(Point) -> f64 + Send + Sync> ScalarField for FiniteDifference<F> {
    fn value(&self, x: Point) -> f64 {
        (self.f)(x)
    }
    fn derivative(&self, i: MultiIndex, x: Point) -> Option<f64> {
        let h = self.step;
        let f = |dx: f64, dy: f64| (self.f)([x[0] + dx, x[1] + dy]);
        Some(match (i.0, i.1) {
            (0, 0) => f(0.0, 0.0),
            (1, 0) => (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h),
            (0, 1) => (f(0.0, h) - f(0.0, -h)) / (2.0 * h),
            (2, 0) => (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h),
            (0, 2) => (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h),
            (1, 1) => (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h),
            _ => return None,
        })
    }
    fn exact_derivatives(&self) -> bool {
        false
    }
}

/// `D^i (a b)` by the Leibniz rule.
fn product_derivative(
    a: &dyn ScalarField,
    b: &dyn ScalarField,
    i: MultiIndex,
    x: Point,
    shift_b: MultiIndex,
) -> Option<f64> {
    let mut s = 0.0;
    for l in i.lower_set() {
        let rest = i.checked_sub(l)?;
        s += i.binomial(l) * a.derivative(l, x)? * b.derivative(rest.add(shift_b), x)?;
    }
    Some(s)
}

/// Source term `f = -div(alpha grad u) + beta . grad u + gamma u` built from
/// the oracles of its ingredients. Derivatives of `f` exist whenever the
/// ingredients supply enough derivatives.
struct ManufacturedSource {
    alpha: Option<Field>,
    beta: [Field; 2],
    gamma: Field,
    exact: Field,
}

impl ManufacturedSource {
    fn eval(&self, i: MultiIndex, x: Point) -> Option<f64> {
        let u = self.exact.as_ref();
        let mut s = 0.0;
        if let Some(alpha) = &self.alpha {
            // D^i div(alpha grad u) = sum_d D^{i + e_d}(alpha * d_d u)
            for d in 0..2 {
                let e = MultiIndex::unit(d);
                s -= product_derivative(alpha.as_ref(), u, i.add(e), x, e)?;
            }
        }
        for d in 0..2 {
            s += product_derivative(self.beta[d].as_ref(), u, i, x, MultiIndex::unit(d))?;
        }
        s += product_derivative(self.gamma.as_ref(), u, i, x, MultiIndex::ZERO)?;
        Some(s)
    }
}

impl ScalarField for ManufacturedSource {
    fn value(&self, x: Point) -> f64 {
        self.eval(MultiIndex::ZERO, x)
            .expect("manufactured source needs first and second derivatives of its data")
    }
    fn derivative(&self, i: MultiIndex, x: Point) -> Option<f64> {
        self.eval(i, x)
    }
    fn exact_derivatives(&self) -> bool {
        let mut exact = self.beta.iter().all(|b| b.exact_derivatives())
            && self.gamma.exact_derivatives()
            && self.exact.exact_derivatives();
        if let Some(a) = &self.alpha {
            exact &= a.exact_derivatives();
        }
        exact
    }
}

/// Coefficients, data and (optionally) exact solution of
/// `-div(alpha grad u) + beta . grad u + gamma u = f`, `u = g_D` on the boundary.
/// `alpha = None` is the pure advection-reaction problem.
#[derive(Clone)]
pub struct PdeCoefficients {
    pub name: String,
    pub alpha: Option<Field>,
    pub beta: [Field; 2],
    pub gamma: Field,
    pub source: Field,
    pub dirichlet: Field,
    pub exact: Option<Field>,
}

impl fmt::Debug for PdeCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeCoefficients")
            .field("name", &self.name)
            .field("diffusion", &self.alpha.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl PdeCoefficients {
    /// Manufactured problem: `f` and `g_D` are derived from `exact`.
    pub fn manufactured(
        name: &str,
        alpha: Option<Field>,
        beta: [Field; 2],
        gamma: Field,
        exact: Field,
    ) -> Self {
        let source: Field = Arc::new(ManufacturedSource {
            alpha: alpha.clone(),
            beta: beta.clone(),
            gamma: gamma.clone(),
            exact: exact.clone(),
        });
        PdeCoefficients {
            name: name.to_string(),
            alpha,
            beta,
            gamma,
            source,
            dirichlet: exact.clone(),
            exact: Some(exact),
        }
    }

    /// Pure diffusion `-div(alpha grad u) = f` manufactured from `exact`.
    pub fn diffusion(name: &str, alpha: Field, exact: Field) -> Self {
        Self::manufactured(
            name,
            Some(alpha),
            [Arc::new(Constant(0.0)), Arc::new(Constant(0.0))],
            Arc::new(Constant(0.0)),
            exact,
        )
    }

    /// Laplace problem with `u = x^2 - y^2`, which lies in every `P^p`, `p >= 2`.
    pub fn laplace_quadratic() -> Self {
        let u = Polynomial::new(vec![(MultiIndex(2, 0), 1.0), (MultiIndex(0, 2), -1.0)]);
        Self::diffusion("LAPLACE_QUADRATIC", Arc::new(Constant(1.0)), Arc::new(u))
    }

    pub fn with_source(mut self, source: Field) -> Self {
        self.source = source;
        self
    }

    pub fn with_dirichlet(mut self, g: Field) -> Self {
        self.dirichlet = g;
        self
    }

    pub fn has_diffusion(&self) -> bool {
        self.alpha.is_some()
    }

    pub fn beta_at(&self, x: Point) -> [f64; 2] {
        [self.beta[0].value(x), self.beta[1].value(x)]
    }

    pub fn alpha_at(&self, x: Point) -> f64 {
        self.alpha.as_ref().map_or(0.0, |a| a.value(x))
    }

    /// Gradient of alpha; zero for the advection-reaction problem.
    pub fn alpha_gradient(&self, x: Point) -> Result<[f64; 2]> {
        match &self.alpha {
            None => Ok([0.0, 0.0]),
            Some(a) => gradient(a.as_ref(), x)
                .ok_or_else(|| Error::MissingDerivative("gradient of alpha".into())),
        }
    }

    pub fn div_beta(&self, x: Point) -> Result<f64> {
        Ok(derivative_or_err(self.beta[0].as_ref(), MultiIndex(1, 0), x, "beta_1")?
            + derivative_or_err(self.beta[1].as_ref(), MultiIndex(0, 1), x, "beta_2")?)
    }

    /// Strong residual `-div(alpha grad u) + beta . grad u + gamma u - f` of
    /// the exact solution at `x`.
    pub fn strong_residual(&self, x: Point) -> Result<f64> {
        let u = self
            .exact
            .as_ref()
            .ok_or_else(|| Error::MissingExactSolution(self.name.clone()))?;
        let du = |i| derivative_or_err(u.as_ref(), i, x, "exact solution");
        let grad = [du(MultiIndex(1, 0))?, du(MultiIndex(0, 1))?];
        let mut r = 0.0;
        if let Some(_alpha) = &self.alpha {
            let lap = du(MultiIndex(2, 0))? + du(MultiIndex(0, 2))?;
            let ga = self.alpha_gradient(x)?;
            r -= self.alpha_at(x) * lap + ga[0] * grad[0] + ga[1] * grad[1];
        }
        let b = self.beta_at(x);
        r += b[0] * grad[0] + b[1] * grad[1] + self.gamma.value(x) * u.value(x);
        Ok(r - self.source.value(x))
    }
}

/// Names of the built-in test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BuiltinCase {
    ArExample,
    DarExample,
    BoxDiffusion2d,
    QtDiffusion,
}

impl BuiltinCase {
    pub const ALL: [BuiltinCase; 4] = [
        BuiltinCase::ArExample,
        BuiltinCase::DarExample,
        BuiltinCase::BoxDiffusion2d,
        BuiltinCase::QtDiffusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinCase::ArExample => "AR_EXAMPLE",
            BuiltinCase::DarExample => "DAR_EXAMPLE",
            BuiltinCase::BoxDiffusion2d => "BOX_DIFFUSION_2D",
            BuiltinCase::QtDiffusion => "QT_DIFFUSION",
        }
    }

    pub fn coefficients(self) -> PdeCoefficients {
        builtin_case(self)
    }
}

impl fmt::Display for BuiltinCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinCase::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                what: "case",
                name: s.to_string(),
            })
    }
}

fn sin_pi_diagonal() -> Field {
    Arc::new(Ridge::sine([1.0, 1.0], PI))
}

fn one_plus_x_plus_y() -> Field {
    Arc::new(Polynomial::new(vec![
        (MultiIndex(0, 0), 1.0),
        (MultiIndex(1, 0), 1.0),
        (MultiIndex(0, 1), 1.0),
    ]))
}

/// Built-in manufactured-solution problems on the unit square.
///
/// `DAR_EXAMPLE` uses `gamma = 4 / (1 + x1 + x2)`.
pub fn builtin_case(case: BuiltinCase) -> PdeCoefficients {
    match case {
        BuiltinCase::ArExample => PdeCoefficients::manufactured(
            case.name(),
            None,
            [
                Arc::new(Polynomial::new(vec![(MultiIndex(1, 0), -1.0)])),
                Arc::new(Polynomial::new(vec![(MultiIndex(0, 1), 1.0)])),
            ],
            Arc::new(Polynomial::new(vec![
                (MultiIndex(1, 0), 1.0),
                (MultiIndex(0, 1), 1.0),
            ])),
            sin_pi_diagonal(),
        ),
        BuiltinCase::DarExample => PdeCoefficients::manufactured(
            case.name(),
            Some(one_plus_x_plus_y()),
            [
                Arc::new(Ridge::sine([1.0, 0.0], 1.0)),
                Arc::new(Ridge::sine([0.0, 1.0], 1.0)),
            ],
            Arc::new(Ridge::new([1.0, 1.0], |n, s| {
                // d^n/ds^n 4 / (1 + s)
                let fact: f64 = (1..=n).map(f64::from).product();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                4.0 * sign * fact / (1.0 + s).powi(n as i32 + 1)
            })),
            sin_pi_diagonal(),
        ),
        BuiltinCase::BoxDiffusion2d | BuiltinCase::QtDiffusion => {
            PdeCoefficients::diffusion(case.name(), one_plus_x_plus_y(), sin_pi_diagonal())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(n: usize) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        (0..n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect()
    }

    #[test]
    fn names_round_trip() {
        for c in BuiltinCase::ALL {
            assert_eq!(c.name().parse::<BuiltinCase>().unwrap(), c);
        }
        assert!("NOPE".parse::<BuiltinCase>().is_err());
    }

    #[test]
    fn ar_example_data() {
        let c = builtin_case(BuiltinCase::ArExample);
        let x = [0.3, 0.6];
        assert_eq!(c.beta_at(x), [-0.3, 0.6]);
        assert_relative_eq!(c.gamma.value(x), 0.9);
        let u = (PI * 0.9).sin();
        let du = PI * (PI * 0.9).cos();
        assert_relative_eq!(c.source.value(x), -0.3 * du + 0.6 * du + 0.9 * u, epsilon = 1e-13);
        assert!(c.alpha.is_none());
    }

    #[test]
    fn dar_example_data() {
        let c = builtin_case(BuiltinCase::DarExample);
        let x = [0.2, 0.5];
        assert_relative_eq!(c.alpha_at(x), 1.7);
        assert_relative_eq!(c.beta_at(x)[0], 0.2f64.sin());
        assert_relative_eq!(c.beta_at(x)[1], 0.5f64.sin());
        assert_relative_eq!(c.gamma.value(x), 4.0 / 1.7, epsilon = 1e-15);
    }

    #[test]
    fn manufactured_consistency() {
        for case in BuiltinCase::ALL {
            let c = builtin_case(case);
            for x in samples(20) {
                assert!(c.strong_residual(x).unwrap().abs() < 1e-8, "{case}");
            }
        }
    }

    #[test]
    fn diffusion_source_matches_closed_form_derivatives() {
        // f(s) = 2 pi^2 (1 + s) sin(pi s) - 2 pi cos(pi s), s = x + y
        let c = builtin_case(BuiltinCase::QtDiffusion);
        let sn = |n: u32, s: f64| PI.powi(n as i32) * (PI * s + f64::from(n) * PI / 2.0).sin();
        let cn = |n: u32, s: f64| PI.powi(n as i32) * (PI * s + f64::from(n) * PI / 2.0).cos();
        let fprime = |n: u32, s: f64| {
            let lower = if n > 0 { f64::from(n) * sn(n - 1, s) } else { 0.0 };
            2.0 * PI * PI * ((1.0 + s) * sn(n, s) + lower) - 2.0 * PI * cn(n, s)
        };
        for x in samples(10) {
            let s = x[0] + x[1];
            for t in 0..=5u32 {
                for b in 0..=t {
                    let i = MultiIndex(t - b, b);
                    let got = c.source.derivative(i, x).unwrap();
                    let want = fprime(t, s);
                    assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{i:?}");
                }
            }
        }
    }

    #[test]
    fn derivative_oracles_match_finite_differences() {
        let h = 1e-5;
        for case in BuiltinCase::ALL {
            let c = builtin_case(case);
            let mut fields: Vec<Field> = vec![c.beta[0].clone(), c.beta[1].clone(), c.gamma.clone()];
            fields.extend(c.alpha.clone());
            fields.extend(c.exact.clone());
            for f in &fields {
                for x in samples(5) {
                    for (i, e) in [(MultiIndex(1, 0), [h, 0.0]), (MultiIndex(0, 1), [0.0, h])] {
                        let fd = (f.value([x[0] + e[0], x[1] + e[1]])
                            - f.value([x[0] - e[0], x[1] - e[1]]))
                            / (2.0 * h);
                        let d = f.derivative(i, x).unwrap();
                        assert!((fd - d).abs() <= 1e-5 * (1.0 + d.abs()), "{case}");
                    }
                }
            }
        }
    }

    #[test]
    fn finite_difference_fallback_is_flagged() {
        let f = FiniteDifference::new(|x: Point| x[0] * x[0] * x[1]);
        assert!(!f.exact_derivatives());
        assert_relative_eq!(f.derivative(MultiIndex(1, 0), [0.5, 2.0]).unwrap(), 2.0, epsilon = 1e-6);
        assert!(f.derivative(MultiIndex(3, 0), [0.5, 2.0]).is_none());
    }
}
