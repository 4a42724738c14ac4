//! Multi-indices and bivariate monomial calculus.

/// Exponent / derivative order pair `(i1, i2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub u32, pub u32);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex(0, 0);

    pub fn order(self) -> u32 {
        self.0 + self.1
    }

    pub fn unit(d: usize) -> Self {
        if d == 0 {
            MultiIndex(1, 0)
        } else {
            MultiIndex(0, 1)
        }
    }

    pub fn add(self, other: MultiIndex) -> Self {
        MultiIndex(self.0 + other.0, self.1 + other.1)
    }

    /// `self - other`, or `None` unless `other <= self` componentwise.
    pub fn checked_sub(self, other: MultiIndex) -> Option<Self> {
        Some(MultiIndex(
            self.0.checked_sub(other.0)?,
            self.1.checked_sub(other.1)?,
        ))
    }

    /// All `l <= self` in the componentwise partial order.
    pub fn lower_set(self) -> impl Iterator<Item = MultiIndex> {
        (0..=self.0).flat_map(move |a| (0..=self.1).map(move |b| MultiIndex(a, b)))
    }

    /// Product of binomial coefficients `C(i1, l1) C(i2, l2)`.
    pub fn binomial(self, l: MultiIndex) -> f64 {
        binomial(self.0, l.0) * binomial(self.1, l.1)
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Multi-indices of total order at most `max_order`, graded, and within each
/// grade ordered by decreasing first component: `(0,0), (1,0), (0,1), (2,0), ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    indices: Vec<MultiIndex>,
    max_order: u32,
}

impl MultiIndexSet {
    pub fn graded(max_order: u32) -> Self {
        let mut indices = Vec::new();
        for t in 0..=max_order {
            for b in 0..=t {
                indices.push(MultiIndex(t - b, b));
            }
        }
        MultiIndexSet { indices, max_order }
    }

    /// Empty set, used where the order bound is negative.
    pub fn empty() -> Self {
        MultiIndexSet {
            indices: Vec::new(),
            max_order: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[MultiIndex] {
        &self.indices
    }
}

/// Dimension of the bivariate polynomials of total degree `p`.
pub fn poly_dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// `D^d (x^e)` at scalar `x`: falling factorial times a power.
#[inline]
pub fn power_derivative(e: u32, d: u32, x: f64) -> f64 {
    if d > e {
        return 0.0;
    }
    let mut c = 1.0;
    for k in 0..d {
        c *= f64::from(e - k);
    }
    c * x.powi((e - d) as i32)
}

/// `D^d (xi1^e1 xi2^e2)` evaluated at `xi`.
#[inline]
pub fn monomial_derivative(e: MultiIndex, d: MultiIndex, xi: [f64; 2]) -> f64 {
    power_derivative(e.0, d.0, xi[0]) * power_derivative(e.1, d.1, xi[1])
}

/// Sparse bivariate polynomial in physical coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<(MultiIndex, f64)>,
}

impl Polynomial {
    pub fn new(terms: Vec<(MultiIndex, f64)>) -> Self {
        Polynomial { terms }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![(MultiIndex::ZERO, c)])
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.order()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        self.derivative(MultiIndex::ZERO, x)
    }

    pub fn derivative(&self, d: MultiIndex, x: [f64; 2]) -> f64 {
        self.terms
            .iter()
            .map(|&(e, c)| c * monomial_derivative(e, d, x))
            .sum()
    }
}
