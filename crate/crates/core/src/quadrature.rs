//! Quadrature on triangles, axis-aligned boxes and straight edges.
//!
//! Triangle rules are collapsed-coordinate (Duffy) products of Gauss-Legendre
//! rules. They are exact to any requested degree up to [`MAX_EXACTNESS`].

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Highest polynomial exactness any rule in this module is built for.
pub const MAX_EXACTNESS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub exactness: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate<F: FnMut(Point) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Axis-aligned square or rectangle `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lo: Point,
    pub hi: Point,
}

impl AxisBox {
    pub fn square(center: Point, side: f64) -> Self {
        let h = 0.5 * side;
        AxisBox {
            lo: [center[0] - h, center[1] - h],
            hi: [center[0] + h, center[1] + h],
        }
    }

    pub fn center(&self) -> Point {
        [0.5 * (self.lo[0] + self.hi[0]), 0.5 * (self.lo[1] + self.hi[1])]
    }

    /// Side length along x.
    pub fn side(&self) -> f64 {
        self.hi[0] - self.lo[0]
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            self.lo,
            [self.hi[0], self.lo[1]],
            self.hi,
            [self.lo[0], self.hi[1]],
        ]
    }
}

/// Integration domain accepted by [`quadrature_rule`].
#[derive(Debug, Clone, Copy)]
pub enum Domain {
    Triangle([Point; 3]),
    Box(AxisBox),
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// three-term recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn check_exactness(exactness: usize) -> Result<()> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedQuadrature {
            requested: exactness,
            max: MAX_EXACTNESS,
        });
    }
    Ok(())
}

/// Quadrature rule on a triangle or box, exact for polynomials of total
/// degree `exactness`. Points are in physical coordinates.
pub fn quadrature_rule(domain: Domain, exactness: usize) -> Result<QuadratureRule> {
    check_exactness(exactness)?;
    match domain {
        Domain::Triangle(v) => Ok(triangle_rule(v, exactness)),
        Domain::Box(b) => Ok(box_rule(b, exactness)),
    }
}

fn triangle_rule(v: [Point; 3], exactness: usize) -> QuadratureRule {
    // the collapsed direction carries the (1 - s) Jacobian: one degree more
    let n = (exactness + 2).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let [a, b, c] = v;
    let area2 = crate::mesh::signed_double_area(a, b, c).abs();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        let s = 0.5 * (x[i] + 1.0);
        for j in 0..n {
            let t = 0.5 * (x[j] + 1.0);
            // reference coordinates (xi, eta) in the unit right triangle
            let xi = s;
            let eta = t * (1.0 - s);
            let wt = 0.25 * w[i] * w[j] * (1.0 - s) * area2;
            points.push([
                a[0] + xi * (b[0] - a[0]) + eta * (c[0] - a[0]),
                a[1] + xi * (b[1] - a[1]) + eta * (c[1] - a[1]),
            ]);
            weights.push(wt);
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness,
    }
}

fn box_rule(b: AxisBox, exactness: usize) -> QuadratureRule {
    let n = (exactness + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let hx = b.hi[0] - b.lo[0];
    let hy = b.hi[1] - b.lo[1];
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            points.push([
                b.lo[0] + 0.5 * (x[i] + 1.0) * hx,
                b.lo[1] + 0.5 * (x[j] + 1.0) * hy,
            ]);
            weights.push(0.25 * w[i] * w[j] * hx * hy);
        }
    }
    QuadratureRule {
        points,
        weights,
        exactness,
    }
}

/// Gauss-Legendre rule on the segment `a`-`b`; weights are in arc length.
pub fn segment_rule(a: Point, b: Point, exactness: usize) -> Result<QuadratureRule> {
    check_exactness(exactness)?;
    let n = (exactness + 1).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let len = crate::mesh::dist(a, b);
    let points = x
        .iter()
        .map(|&s| {
            let t = 0.5 * (s + 1.0);
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect();
    let weights = w.iter().map(|&wi| 0.5 * wi * len).collect();
    Ok(QuadratureRule {
        points,
        weights,
        exactness,
    })
}
