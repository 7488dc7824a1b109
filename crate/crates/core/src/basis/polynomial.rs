use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

use super::MultiIndex;

/// A sparse multivariate polynomial `Σ c_α x^α`; zero coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    d: usize,
    terms: BTreeMap<MultiIndex, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(d: usize, c: T) -> Self {
        let mut p = Self::zero(d);
        p.add_term(MultiIndex::zero(d), c);
        p
    }

    pub fn monomial(alpha: MultiIndex, c: T) -> Self {
        let mut p = Self::zero(alpha.dim());
        p.add_term(alpha, c);
        p
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut p = Self::zero(d);
        for (alpha, c) in terms {
            if alpha.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: alpha.dim(),
                });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, alpha: MultiIndex, c: T) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(e) => {
                *e = e.clone() + c;
                if e.is_zero() {
                    self.terms.remove(&alpha);
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, T> {
        &self.terms
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> T {
        self.terms.get(alpha).cloned().unwrap_or_else(T::zero)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::total_degree).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return Self::zero(self.d);
        }
        Self {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.clone(), c.clone() * s.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Self::zero(self.d);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.add(b)?, ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    /// `x_i`-only polynomial lifted into `d` variables (1-based `i`).
    pub fn embed(&self, d: usize, i: usize) -> Result<Self> {
        if self.d != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.d,
            });
        }
        let terms = self
            .terms
            .iter()
            .map(|(a, c)| (MultiIndex::unit(d, i, a.degrees()[0]), c.clone()));
        Self::from_terms(d, terms)
    }

    /// Exact evaluation in the coefficient field.
    pub fn eval_exact(&self, x: &[T]) -> Result<T> {
        self.check_point(x.len())?;
        let mut acc = T::zero();
        for (a, c) in &self.terms {
            let mut m = c.clone();
            for (xi, &k) in x.iter().zip(a.degrees()) {
                for _ in 0..k {
                    m = m * xi.clone();
                }
            }
            acc = acc + m;
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x.len())?;
        Ok(self
            .terms
            .iter()
            .map(|(a, c)| {
                a.degrees()
                    .iter()
                    .zip(x)
                    .fold(c.to_f64(), |m, (&k, xi)| m * xi.powi(k as i32))
            })
            .sum())
    }

    fn check_point(&self, n: usize) -> Result<()> {
        if n != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: n,
            });
        }
        Ok(())
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        Polynomial {
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.clone(), c.to_f64()))
                .filter(|(_, c)| *c != 0.0)
                .collect(),
        }
    }
}

impl Polynomial<Rational> {
    pub fn approx_eq(&self, other: &Polynomial<f64>, tol: f64) -> bool {
        self.to_f64().approx_eq(other, tol)
    }
}

impl Polynomial<f64> {
    /// Coefficient-wise comparison within `tol`.
    pub fn approx_eq(&self, other: &Polynomial<f64>, tol: f64) -> bool {
        self.d == other.d
            && self
                .terms
                .keys()
                .chain(other.terms.keys())
                .all(|a| (self.coeff(a) - other.coeff(a)).abs() <= tol)
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| {
                let mono: Vec<String> = a
                    .degrees()
                    .iter()
                    .enumerate()
                    .filter(|(_, &k)| k > 0)
                    .map(|(i, &k)| match k {
                        1 => format!("x{}", i + 1),
                        _ => format!("x{}^{k}", i + 1),
                    })
                    .collect();
                if mono.is_empty() {
                    format!("{c}")
                } else {
                    format!("{c}*{}", mono.join("*"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl<T: fmt::Debug> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}
