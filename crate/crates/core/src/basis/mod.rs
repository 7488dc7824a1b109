//! Orthonormal polynomial bases: Legendre families on `[-1,1]` and Gram-Schmidt from moments.
//!
//! All inner products are expectations, i.e. taken against a probability density;
//! for the uniform weight that is `½ dx` on `[-1,1]`, so `‖P_n‖² = 1/(2n+1)`.

mod gram_schmidt;
mod multi_index;
mod polynomial;

use std::collections::BTreeMap;

use num_bigint::BigInt;

pub use gram_schmidt::gram_schmidt_from_moments;
pub use multi_index::MultiIndex;
pub use polynomial::Polynomial;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// The probability measure an inner product is taken against.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    /// Product of uniform densities `½` on `[-1,1]`.
    Uniform,
    /// Raw moments `μ^α = E[X^α]`.
    Moments(BTreeMap<MultiIndex, f64>),
}

impl Weight {
    pub fn moment(&self, alpha: &MultiIndex) -> Result<f64> {
        match self {
            Weight::Uniform => Ok(uniform_moment(alpha).to_f64()),
            Weight::Moments(m) => m
                .get(alpha)
                .copied()
                .ok_or_else(|| Error::MissingMoment(alpha.to_string())),
        }
    }
}

/// `E[X^α]` for independent uniforms on `[-1,1]`: `Π 1/(α_i+1)` when every `α_i` is even, else 0.
pub fn uniform_moment(alpha: &MultiIndex) -> Rational {
    if alpha.degrees().iter().any(|k| k % 2 == 1) {
        return Rational::from_i64(0);
    }
    alpha
        .degrees()
        .iter()
        .fold(Rational::from_i64(1), |acc, &k| acc / Rational::from_i64(k as i64 + 1))
}

/// `E[p(X)]` under `weight`.
pub fn expectation(p: &Polynomial<f64>, weight: &Weight) -> Result<f64> {
    p.terms()
        .iter()
        .map(|(a, c)| Ok(c * weight.moment(a)?))
        .sum()
}

/// Exact `E[p(X)]` under the uniform weight.
pub fn expectation_exact(p: &Polynomial<Rational>) -> Rational {
    p.terms()
        .iter()
        .fold(Rational::from_i64(0), |acc, (a, c)| acc + c * uniform_moment(a))
}

/// Legendre polynomial `P_n` (univariate, `P_n(1) = 1`) from the three-term recurrence
/// `(n+1) P_{n+1} = (2n+1) x P_n − n P_{n−1}`.
pub fn legendre(n: u32) -> Polynomial<Rational> {
    let x = Polynomial::monomial(MultiIndex::new(vec![1]), Rational::from_i64(1));
    let mut prev = Polynomial::constant(1, Rational::from_i64(1));
    if n == 0 {
        return prev;
    }
    let mut cur = x.clone();
    for k in 1..n {
        let k = k as i64;
        let a = Rational::new(BigInt::from(2 * k + 1), BigInt::from(k + 1));
        let b = Rational::new(BigInt::from(-k), BigInt::from(k + 1));
        let next = x.mul(&cur).expect("univariate").scale(&a).add(&prev.scale(&b));
        prev = cur;
        cur = next;
    }
    cur
}

/// `p / ‖p‖` with `‖p‖² = E[p²]` under `weight`.
pub fn normalize(p: &Polynomial<Rational>, weight: &Weight) -> Result<Polynomial<f64>> {
    if p.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let sq = p.mul(p)?;
    let norm2 = match weight {
        Weight::Uniform => expectation_exact(&sq).to_f64(),
        Weight::Moments(_) => expectation(&sq.to_f64(), weight)?,
    };
    if norm2 <= 0.0 {
        return Err(Error::ZeroPolynomial);
    }
    Ok(p.to_f64().scale(&(1.0 / norm2.sqrt())))
}

/// Values `P̃_0(x), …, P̃_n(x)` of the normalized Legendre polynomials `√(2k+1)·P_k`.
pub fn legendre_normalized_values(x: f64, n: u32) -> Vec<f64> {
    let n = n as usize;
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(x);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    for (k, v) in p.iter_mut().enumerate() {
        *v *= ((2 * k + 1) as f64).sqrt();
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    LegendreNormalized,
    GramSchmidt,
}

/// An orthonormal polynomial family in `d` variables whose element 0 is the constant 1.
#[derive(Clone, Debug)]
pub struct Basis {
    d: usize,
    kind: BasisKind,
    weight: Weight,
    /// Explicit elements keyed by leading monomial (Gram-Schmidt only).
    elements: Vec<(MultiIndex, Polynomial<f64>)>,
}

impl Basis {
    pub fn legendre(d: usize) -> Self {
        Self {
            d,
            kind: BasisKind::LegendreNormalized,
            weight: Weight::Uniform,
            elements: Vec::new(),
        }
    }

    pub(crate) fn from_elements(
        d: usize,
        weight: Weight,
        elements: Vec<(MultiIndex, Polynomial<f64>)>,
    ) -> Self {
        Self {
            d,
            kind: BasisKind::GramSchmidt,
            weight,
            elements,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// Gram-Schmidt elements in construction order (empty for the Legendre family).
    pub fn elements(&self) -> &[(MultiIndex, Polynomial<f64>)] {
        &self.elements
    }

    /// The element with leading index `alpha`.
    pub fn element(&self, alpha: &MultiIndex) -> Result<Polynomial<f64>> {
        match self.kind {
            BasisKind::LegendreNormalized => tensor(alpha, self),
            BasisKind::GramSchmidt => self
                .elements
                .iter()
                .find(|(a, _)| a == alpha)
                .map(|(_, p)| p.clone())
                .ok_or_else(|| Error::InvalidConfig(format!("no basis element with index {alpha}"))),
        }
    }

    /// `Ψ_α(x)`; uses the recurrence directly for the Legendre family.
    pub fn eval(&self, alpha: &MultiIndex, x: &[f64]) -> Result<f64> {
        if alpha.dim() != self.d || x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: if alpha.dim() != self.d { alpha.dim() } else { x.len() },
            });
        }
        match self.kind {
            BasisKind::LegendreNormalized => Ok(alpha
                .degrees()
                .iter()
                .zip(x)
                .map(|(&k, &xi)| legendre_normalized_values(xi, k)[k as usize])
                .product()),
            BasisKind::GramSchmidt => self.element(alpha)?.eval(x),
        }
    }
}

/// `Ψ_α(x) = Π_i P̃_{α_i}(x_i)` for the tensorized normalized Legendre family.
pub fn tensor(alpha: &MultiIndex, basis: &Basis) -> Result<Polynomial<f64>> {
    if basis.kind != BasisKind::LegendreNormalized {
        return Err(Error::InvalidConfig(
            "tensor products need an independent-marginal basis".into(),
        ));
    }
    if alpha.dim() != basis.d {
        return Err(Error::DimensionMismatch {
            expected: basis.d,
            found: alpha.dim(),
        });
    }
    let d = basis.d;
    let mut acc = Polynomial::constant(d, 1.0);
    for (i, &k) in alpha.degrees().iter().enumerate() {
        if k == 0 {
            continue;
        }
        let factor = normalize(&legendre(k), &Weight::Uniform)?.embed(d, i + 1)?;
        acc = acc.mul(&factor)?;
    }
    Ok(acc)
}
