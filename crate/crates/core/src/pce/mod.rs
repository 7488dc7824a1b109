//! Truncated polynomial chaos expansions over independent uniforms on `[-1,1]^d`.
//!
//! A [`Pce`] lives in the Rosenblatt image space: coordinate `k` belongs to input
//! `ordering[k]` of its distribution. Coefficients are with respect to the normalized
//! Legendre tensor basis, so variances are sums of squared coefficients.

mod loo;
mod qnorm;
mod sparse;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use loo::{loo_validate, LooResult};
pub use qnorm::QNorm;
pub use sparse::{build_sparse, RingLog, SparseConfig, VarianceMethod};

use crate::basis::{Basis, MultiIndex};
use crate::error::{Error, Result};
use crate::game::Coalition;
use crate::transform::DistributionSpec;

/// Absolute slack allowed when a retained variance exceeds the σ² estimate.
pub const VARIANCE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Pce {
    d: usize,
    distribution: DistributionSpec,
    coeffs: BTreeMap<MultiIndex, f64>,
    sigma2_estimate: f64,
    converged: bool,
    epsilon: f64,
    log: Vec<RingLog>,
    sigma2_method: Option<VarianceMethod>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PceFile {
    d: usize,
    distribution: DistributionSpec,
    coefficients: Vec<CoefficientEntry>,
    sigma2_estimate: f64,
    converged: bool,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    alpha: MultiIndex,
    y: f64,
}

impl Pce {
    /// A PCE from explicit coefficients; the mean term is inserted if absent.
    pub fn new(
        distribution: DistributionSpec,
        coeffs: BTreeMap<MultiIndex, f64>,
        sigma2_estimate: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let d = distribution.dim();
        if let Some(a) = coeffs.keys().find(|a| a.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
            });
        }
        let mut coeffs = coeffs;
        coeffs.entry(MultiIndex::zero(d)).or_insert(0.0);
        let mut pce = Self {
            d,
            distribution,
            coeffs,
            sigma2_estimate,
            converged: false,
            epsilon,
            log: Vec::new(),
            sigma2_method: None,
        };
        pce.converged = pce.epsilon_l() < epsilon;
        Ok(pce)
    }

    /// A PCE whose σ² is its own retained variance (no truncation error).
    pub fn exact(distribution: DistributionSpec, coeffs: BTreeMap<MultiIndex, f64>) -> Result<Self> {
        let mut p = Self::new(distribution, coeffs, 0.0, f64::MIN_POSITIVE)?;
        p.sigma2_estimate = p.variance();
        p.converged = true;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn distribution(&self) -> &DistributionSpec {
        &self.distribution
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, f64> {
        &self.coeffs
    }

    pub fn sigma2_estimate(&self) -> f64 {
        self.sigma2_estimate
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Ring-by-ring audit trail of [`build_sparse`] (empty for loaded or hand-built PCEs).
    pub fn construction_log(&self) -> &[RingLog] {
        &self.log
    }

    /// How σ̂² was estimated, when built by [`build_sparse`].
    pub fn sigma2_method(&self) -> Option<&VarianceMethod> {
        self.sigma2_method.as_ref()
    }

    /// Number of stored terms, including the mean.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `y_0`.
    pub fn mean(&self) -> f64 {
        self.coeffs.get(&MultiIndex::zero(self.d)).copied().unwrap_or(0.0)
    }

    /// `Σ_{α≠0} y_α²`.
    pub fn variance(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(a, _)| !a.is_zero())
            .map(|(_, y)| y * y)
            .sum()
    }

    /// `ε_l = max(0, σ̂² − Σ y_α²)` against the stored σ̂².
    pub fn epsilon_l(&self) -> f64 {
        (self.sigma2_estimate - self.variance()).max(0.0)
    }

    /// `Var(ε_l) = σ² − Σ_{α≠0} y_α²`, clamped at 0; an overshoot beyond tolerance means
    /// `σ²` is inconsistent with the coefficients.
    pub fn truncation_error(&self, sigma2_total: f64) -> Result<f64> {
        let retained = self.variance();
        let e = sigma2_total - retained;
        if e < -VARIANCE_TOLERANCE * sigma2_total.abs().max(1.0) {
            return Err(Error::InconsistentVariance {
                sigma2: sigma2_total,
                retained,
            });
        }
        Ok(e.max(0.0))
    }

    /// Chebyshev bound `(σ² − Σ y_α²)² / t²` on the tail of the truncation error.
    pub fn chebyshev_tail(&self, sigma2_total: f64, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::InvalidConfig(format!("t must be positive, got {t}")));
        }
        let e = self.truncation_error(sigma2_total)?;
        Ok(e * e / (t * t))
    }

    /// `σ̂²_u = Σ_{support(α) = u} y_α²` (in image-space coordinates).
    pub fn partial_variance(&self, u: Coalition) -> Result<f64> {
        self.check_subset(u)?;
        Ok(self
            .coeffs
            .iter()
            .filter(|(a, _)| a.support() == u)
            .map(|(_, y)| y * y)
            .sum())
    }

    /// All nonzero partial variances keyed by support.
    pub fn partial_variances(&self) -> BTreeMap<Coalition, f64> {
        let mut out = BTreeMap::new();
        for (a, y) in self.coeffs.iter().filter(|(a, _)| !a.is_zero()) {
            *out.entry(a.support()).or_insert(0.0) += y * y;
        }
        out
    }

    /// Closed Sobol index `S_u = Σ_{v⊆u} σ̂²_v`.
    pub fn sobol(&self, u: Coalition) -> Result<f64> {
        self.check_subset(u)?;
        self.require_independent()?;
        Ok(self
            .partial_variances()
            .into_iter()
            .filter(|(v, _)| v.is_subset_of(u))
            .map(|(_, s)| s)
            .sum())
    }

    /// Total Sobol index `S^T_u = Σ_{v∩u≠∅} σ̂²_v`.
    pub fn total_sobol(&self, u: Coalition) -> Result<f64> {
        self.check_subset(u)?;
        self.require_independent()?;
        Ok(self
            .partial_variances()
            .into_iter()
            .filter(|(v, _)| v.intersects(u))
            .map(|(_, s)| s)
            .sum())
    }

    fn require_independent(&self) -> Result<()> {
        if self.distribution.is_independent() {
            Ok(())
        } else {
            Err(Error::DependentInputs)
        }
    }

    fn check_subset(&self, u: Coalition) -> Result<()> {
        if u.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: u.dim(),
            });
        }
        if u.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(())
    }

    /// `Σ y_α Ψ_α(u)` at a point of the image space `[-1,1]^d`.
    pub fn eval_image(&self, u: &[f64]) -> Result<f64> {
        let basis = Basis::legendre(self.d);
        self.coeffs
            .iter()
            .map(|(a, y)| Ok(y * basis.eval(a, u)?))
            .sum()
    }

    /// A copy keeping only the terms for which `keep` holds (the mean is always kept).
    pub fn truncated(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        let mut out = self.clone();
        out.coeffs.retain(|a, _| a.is_zero() || keep(a));
        out.converged = out.epsilon_l() < out.epsilon;
        out
    }

    pub fn to_json(&self) -> String {
        let file = PceFile {
            d: self.d,
            distribution: self.distribution.clone(),
            coefficients: self
                .coeffs
                .iter()
                .map(|(a, y)| CoefficientEntry {
                    alpha: a.clone(),
                    y: *y,
                })
                .collect(),
            sigma2_estimate: self.sigma2_estimate,
            converged: self.converged,
            epsilon: self.epsilon,
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: PceFile = serde_json::from_str(text)?;
        if f.distribution.dim() != f.d {
            return Err(Error::DimensionMismatch {
                expected: f.d,
                found: f.distribution.dim(),
            });
        }
        let mut coeffs = BTreeMap::new();
        for c in f.coefficients {
            if c.alpha.dim() != f.d {
                return Err(Error::DimensionMismatch {
                    expected: f.d,
                    found: c.alpha.dim(),
                });
            }
            if coeffs.insert(c.alpha.clone(), c.y).is_some() {
                return Err(Error::Json(format!("coefficient {} listed twice", c.alpha)));
            }
        }
        coeffs.entry(MultiIndex::zero(f.d)).or_insert(0.0);
        Ok(Self {
            d: f.d,
            distribution: f.distribution,
            coeffs,
            sigma2_estimate: f.sigma2_estimate,
            converged: f.converged,
            epsilon: f.epsilon,
            log: Vec::new(),
            sigma2_method: None,
        })
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// PCE of `x₁ + x₁x₂` on uniforms: `y_(1,0) = 1/√3`, `y_(1,1) = 1/3`.
    pub(crate) fn example_pce() -> Pce {
        let mut c = BTreeMap::new();
        c.insert(MultiIndex::new(vec![1, 0]), 1.0 / 3f64.sqrt());
        c.insert(MultiIndex::new(vec![1, 1]), 1.0 / 3.0);
        Pce::exact(DistributionSpec::uniform(2), c).unwrap()
    }

    fn c(ix: &[usize]) -> Coalition {
        Coalition::from_indices(2, ix).unwrap()
    }

    #[test]
    fn moments() {
        let p = example_pce();
        assert_eq!(p.mean(), 0.0);
        assert!((p.variance() - 4.0 / 9.0).abs() < 1e-15);
        let k = Pce::exact(
            DistributionSpec::uniform(1),
            [(MultiIndex::zero(1), 2.5)].into_iter().collect(),
        )
        .unwrap();
        assert_eq!((k.mean(), k.variance()), (2.5, 0.0));
    }

    #[test]
    fn truncation_and_tail() {
        let p = example_pce();
        assert!(p.truncation_error(p.variance()).unwrap().abs() < 1e-15);
        let dropped = p.truncated(|a| a.degrees() != [1, 1]);
        let e = dropped.truncation_error(4.0 / 9.0).unwrap();
        assert!((e - 1.0 / 9.0).abs() < 1e-15);
        let tail = dropped.chebyshev_tail(4.0 / 9.0, 1.0 / 3.0).unwrap();
        assert!((tail - 1.0 / 9.0).abs() < 1e-15);
        assert!(dropped.chebyshev_tail(4.0 / 9.0, 1e12).unwrap() < 1e-20);
        assert!(dropped.chebyshev_tail(4.0 / 9.0, 0.0).is_err());
        let mean_only = p.truncated(|_| false);
        assert_eq!(mean_only.truncation_error(4.0 / 9.0).unwrap(), 4.0 / 9.0);
        assert!(matches!(
            p.truncation_error(0.1),
            Err(Error::InconsistentVariance { .. })
        ));
    }

    #[test]
    fn partial_variances_and_sobol() {
        let p = example_pce();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(p.partial_variance(c(&[1])).unwrap(), 1.0 / 3.0));
        assert!(close(p.partial_variance(c(&[1, 2])).unwrap(), 1.0 / 9.0));
        assert_eq!(p.partial_variance(c(&[2])).unwrap(), 0.0);
        assert!(p.partial_variance(c(&[])).is_err());
        assert!(close(p.sobol(c(&[1])).unwrap(), 1.0 / 3.0));
        assert!(close(p.total_sobol(c(&[1])).unwrap(), 4.0 / 9.0));
        assert_eq!(p.sobol(c(&[2])).unwrap(), 0.0);
        assert!(close(p.total_sobol(c(&[2])).unwrap(), 1.0 / 9.0));
        assert!(close(p.sobol(c(&[1, 2])).unwrap(), p.variance()));
        for u in [c(&[1]), c(&[2])] {
            let s = p.sobol(u).unwrap() + p.total_sobol(u.complement()).unwrap();
            assert!(close(s, p.variance()));
        }
    }

    #[test]
    fn sobol_refuses_dependent_inputs() {
        let dist = DistributionSpec::mvnormal(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.5, 1.0]])
            .unwrap();
        let p = Pce::exact(dist, example_pce().coefficients().clone()).unwrap();
        assert!(matches!(p.sobol(c(&[1])), Err(Error::DependentInputs)));
        assert!(matches!(p.total_sobol(c(&[1])), Err(Error::DependentInputs)));
        assert!(p.partial_variance(c(&[1])).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let p = example_pce();
        let text = p.to_json();
        assert!(text.contains("\"alpha\""));
        let back = Pce::from_json(&text).unwrap();
        assert_eq!(back.coefficients(), p.coefficients());
        assert_eq!(back.sigma2_estimate(), p.sigma2_estimate());
        assert!(Pce::from_json(r#"{"d":2}"#).is_err());
    }

    #[test]
    fn evaluation_in_image_space() {
        let p = example_pce();
        let v = p.eval_image(&[0.5, -0.25]).unwrap();
        assert!((v - (0.5 + 0.5 * -0.25)).abs() < 1e-15);
    }
}
