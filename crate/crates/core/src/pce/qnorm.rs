//! Exact evaluation of the q-norm predicate `(Σ α_i^q)^{1/q} ≤ p` for rational `q = a/b`.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Rational;

/// Fixed-point scale (bits) for the root enclosures.
const SCALE_BITS: u64 = 200;

/// A q-norm exponent `q = a/b ∈ (0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QNorm {
    a: u32,
    b: u32,
}

impl QNorm {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a == 0 || b == 0 || a > b {
            return Err(Error::InvalidConfig(format!("q = {a}/{b} must lie in (0, 1]")));
        }
        let g = num_integer::gcd(a, b);
        Ok(Self { a: a / g, b: b / g })
    }

    pub fn from_rational(q: &Rational) -> Result<Self> {
        use num_traits::ToPrimitive;
        let bad = || Error::InvalidConfig(format!("q = {q} needs a numerator and denominator below 2^32"));
        let a = q.numer().to_u32().ok_or_else(bad)?;
        let b = q.denom().to_u32().ok_or_else(bad)?;
        Self::new(a, b)
    }

    pub fn total_degree() -> Self {
        Self { a: 1, b: 1 }
    }

    pub fn as_f64(self) -> f64 {
        self.a as f64 / self.b as f64
    }

    pub fn parts(self) -> (u32, u32) {
        (self.a, self.b)
    }

    /// Whether `(Σ α_i^q)^{1/q} ≤ p`, decided exactly.
    pub fn admits(self, alpha: &[u32], p: u32) -> bool {
        let nonzero: Vec<u32> = alpha.iter().copied().filter(|&k| k > 0).collect();
        match nonzero.len() {
            0 => true,
            1 => nonzero[0] <= p,
            _ if self.b == 1 => {
                // integer exponent: Σ α_i^a ≤ p^a
                let lhs: BigUint = nonzero.iter().map(|&k| BigUint::from(k).pow(self.a)).sum();
                lhs <= BigUint::from(p).pow(self.a)
            }
            _ => {
                let (mut lo, mut hi) = (BigUint::zero(), BigUint::zero());
                for &k in &nonzero {
                    let (l, h) = self.power_enclosure(k);
                    lo += l;
                    hi += h;
                }
                let (p_lo, p_hi) = self.power_enclosure(p);
                if hi <= p_lo {
                    true
                } else if lo > p_hi {
                    false
                } else {
                    // enclosures overlap only within 2^-200 of equality
                    true
                }
            }
        }
    }

    /// `[⌊x^{a/b}·2^S⌋, ⌈x^{a/b}·2^S⌉]`.
    fn power_enclosure(self, x: u32) -> (BigUint, BigUint) {
        let radicand = BigUint::from(x).pow(self.a) << (SCALE_BITS * self.b as u64);
        let r = radicand.nth_root(self.b);
        if r.pow(self.b) == radicand {
            (r.clone(), r)
        } else {
            let up = &r + BigUint::one();
            (r, up)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_degree_case() {
        let q = QNorm::total_degree();
        assert!(q.admits(&[1, 1, 1], 3));
        assert!(!q.admits(&[2, 1, 1], 3));
        assert!(q.admits(&[0, 0], 0));
    }

    #[test]
    fn half_norm() {
        let q = QNorm::new(1, 2).unwrap();
        // univariate terms pass at their degree
        assert!(q.admits(&[3, 0, 0], 3));
        assert!(!q.admits(&[3, 0, 0], 2));
        // (1 + 1)^2 = 4: admitted exactly at p = 4, not before
        assert!(q.admits(&[1, 1], 4));
        assert!(!q.admits(&[1, 1], 3));
        // (√2 + 1)^2 ≈ 5.83
        assert!(!q.admits(&[2, 1], 5));
        assert!(q.admits(&[2, 1], 6));
    }

    #[test]
    fn matches_float_away_from_boundaries() {
        for (a, b) in [(1, 2), (2, 3), (3, 4), (1, 3)] {
            let q = QNorm::new(a, b).unwrap();
            let qf = q.as_f64();
            for alpha in crate::basis::MultiIndex::graded(3, 6) {
                for p in 0..=8 {
                    let f: f64 = alpha
                        .degrees()
                        .iter()
                        .map(|&k| (k as f64).powf(qf))
                        .sum::<f64>()
                        .powf(1.0 / qf);
                    if (f - p as f64).abs() > 1e-9 {
                        assert_eq!(q.admits(alpha.degrees(), p), f <= p as f64, "{alpha} {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_q() {
        assert!(QNorm::new(3, 2).is_err());
        assert!(QNorm::new(0, 1).is_err());
        assert_eq!(QNorm::new(2, 4).unwrap().parts(), (1, 2));
    }
}
