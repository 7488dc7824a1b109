use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Coalition;

/// A multi-index `α ∈ ℕ^d`.
///
/// Ordering is the fixed enumeration order used everywhere a basis is listed:
/// graded by total degree, ties broken by descending lexicographic order, so
/// `(0,0) < (1,0) < (0,1) < (2,0) < (1,1) < (0,2) < …`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(degrees: Vec<u32>) -> Self {
        Self(degrees)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// `α = k·e_i` with 1-based `i`.
    pub fn unit(d: usize, i: usize, k: u32) -> Self {
        let mut v = vec![0; d];
        v[i - 1] = k;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degrees(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn max_degree(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// `{ i : α_i > 0 }`.
    pub fn support(&self) -> Coalition {
        let bits = self
            .0
            .iter()
            .enumerate()
            .filter(|(_, &a)| a > 0)
            .fold(0u32, |acc, (i, _)| acc | (1 << i));
        Coalition::from_bits(self.dim(), bits).expect("dimension checked by caller")
    }

    /// `χ_u(α)`: true iff the support is exactly `u`.
    pub fn chi(&self, u: Coalition) -> bool {
        self.support() == u
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    /// All multi-indices of total degree exactly `n`, in descending lexicographic order.
    pub fn of_total_degree(d: usize, n: u32) -> Vec<Self> {
        fn rec(d: usize, n: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() + 1 == d {
                prefix.push(n);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for k in (0..=n).rev() {
                prefix.push(k);
                rec(d, n - k, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if d == 0 {
            if n == 0 {
                out.push(Self(Vec::new()));
            }
            return out;
        }
        rec(d, n, &mut Vec::with_capacity(d), &mut out);
        out
    }

    /// All multi-indices with total degree ≤ `p`, in enumeration order.
    pub fn graded(d: usize, p: u32) -> Vec<Self> {
        (0..=p).flat_map(|n| Self::of_total_degree(d, n)).collect()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dim()
            .cmp(&other.dim())
            .then_with(|| self.total_degree().cmp(&other.total_degree()))
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}
