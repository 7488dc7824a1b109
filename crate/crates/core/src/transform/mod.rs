//! Input distributions and the Rosenblatt transform onto independent uniforms on `[-1,1]^d`.

mod normal;
mod rosenblatt;

use serde::{Deserialize, Serialize};

pub use normal::{normal_cdf, normal_pdf, normal_quantile};
pub use rosenblatt::{marginal_cdf, Rosenblatt};

use crate::error::{Error, Result};
use crate::scalar::{ExactValue, Rational};

/// One independent input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Marginal {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
    Bernoulli { p: ExactValue },
    /// Finite pmf over `values` with probabilities `probs`.
    Discrete {
        values: Vec<ExactValue>,
        probs: Vec<ExactValue>,
    },
}

impl Marginal {
    pub fn is_continuous(&self) -> bool {
        matches!(self, Marginal::Uniform { .. } | Marginal::Normal { .. })
    }

    /// Exact support points and probabilities of a discrete marginal.
    pub fn atoms(&self) -> Result<Vec<(Rational, Rational)>> {
        match self {
            Marginal::Bernoulli { p } => {
                let one = Rational::from_integer(1.into());
                Ok(vec![
                    (Rational::from_integer(0.into()), one.clone() - p.0.clone()),
                    (one, p.0.clone()),
                ])
            }
            Marginal::Discrete { values, probs } => Ok(values
                .iter()
                .zip(probs)
                .map(|(v, p)| (v.0.clone(), p.0.clone()))
                .collect()),
            _ => Err(Error::ContinuousUnsupported),
        }
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        match self {
            Marginal::Uniform { a, b } => (0.5 * (a + b), (b - a).powi(2) / 12.0),
            Marginal::Normal { mu, sigma } => (*mu, sigma * sigma),
            other => {
                let atoms = other.atoms().expect("discrete");
                let m: f64 = atoms.iter().map(|(v, p)| to_f64(v) * to_f64(p)).sum();
                let m2: f64 = atoms.iter().map(|(v, p)| to_f64(v).powi(2) * to_f64(p)).sum();
                (m, m2 - m * m)
            }
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(format!("input {index}: {msg}")));
        match self {
            Marginal::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return bad(format!("uniform needs a < b, got ({a}, {b})"));
                }
            }
            Marginal::Normal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && *sigma > 0.0) {
                    return bad(format!("normal needs finite mu and sigma > 0, got ({mu}, {sigma})"));
                }
            }
            Marginal::Bernoulli { p } => {
                let zero = Rational::from_integer(0.into());
                let one = Rational::from_integer(1.into());
                if p.0 < zero || p.0 > one {
                    return bad("bernoulli p must lie in [0, 1]".into());
                }
            }
            Marginal::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return bad("discrete needs matching, nonempty values and probs".into());
                }
                let mut sorted: Vec<_> = values.iter().collect();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return bad("discrete values must be distinct".into());
                }
                check_pmf(probs.iter().map(|p| &p.0)).or_else(|m| bad(m))?;
            }
        }
        Ok(())
    }
}

fn to_f64(r: &Rational) -> f64 {
    crate::scalar::rational_to_f64(r)
}

fn check_pmf<'a>(probs: impl Iterator<Item = &'a Rational>) -> std::result::Result<(), String> {
    let zero = Rational::from_integer(0.into());
    let mut total = zero.clone();
    for p in probs {
        if *p < zero {
            return Err("probabilities must be nonnegative".into());
        }
        total += p.clone();
    }
    if (to_f64(&total) - 1.0).abs() > 1e-12 {
        return Err(format!("probabilities sum to {}, not 1", to_f64(&total)));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MvNormal {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// One outcome of an explicit joint pmf.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointAtom {
    pub x: Vec<ExactValue>,
    pub p: ExactValue,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Independent(Vec<Marginal>),
    MvNormal(MvNormal),
    JointPmf(Vec<JointAtom>),
}

/// A validated input distribution with an optional Rosenblatt ordering (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct DistributionSpec {
    family: Family,
    ordering: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marginals: Option<Vec<Marginal>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mvnormal: Option<MvNormal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint_pmf: Option<Vec<JointAtom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ordering: Option<Vec<usize>>,
}

impl TryFrom<RawSpec> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let family = match (raw.marginals, raw.mvnormal, raw.joint_pmf) {
            (Some(m), None, None) => Family::Independent(m),
            (None, Some(n), None) => Family::MvNormal(n),
            (None, None, Some(j)) => Family::JointPmf(j),
            _ => {
                return Err(Error::InvalidDistribution(
                    "give exactly one of \"marginals\", \"mvnormal\", \"joint_pmf\"".into(),
                ))
            }
        };
        Self::new(family, raw.ordering)
    }
}

impl From<DistributionSpec> for RawSpec {
    fn from(s: DistributionSpec) -> Self {
        let mut raw = RawSpec {
            marginals: None,
            mvnormal: None,
            joint_pmf: None,
            ordering: s.ordering,
        };
        match s.family {
            Family::Independent(m) => raw.marginals = Some(m),
            Family::MvNormal(n) => raw.mvnormal = Some(n),
            Family::JointPmf(j) => raw.joint_pmf = Some(j),
        }
        raw
    }
}

impl DistributionSpec {
    pub fn new(family: Family, ordering: Option<Vec<usize>>) -> Result<Self> {
        let spec = Self { family, ordering };
        spec.validate()?;
        Ok(spec)
    }

    pub fn independent(marginals: Vec<Marginal>) -> Result<Self> {
        Self::new(Family::Independent(marginals), None)
    }

    /// `d` independent uniforms on `[-1,1]`.
    pub fn uniform(d: usize) -> Self {
        Self::independent(vec![Marginal::Uniform { a: -1.0, b: 1.0 }; d]).expect("valid")
    }

    pub fn mvnormal(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Family::MvNormal(MvNormal { mean, cov }), None)
    }

    pub fn with_ordering(mut self, ordering: Vec<usize>) -> Result<Self> {
        self.ordering = Some(ordering);
        self.validate()?;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// The Rosenblatt ordering (1-based), natural order if none was given.
    pub fn ordering(&self) -> Vec<usize> {
        self.ordering
            .clone()
            .unwrap_or_else(|| (1..=self.dim()).collect())
    }

    pub fn dim(&self) -> usize {
        match &self.family {
            Family::Independent(m) => m.len(),
            Family::MvNormal(n) => n.mean.len(),
            Family::JointPmf(j) => j.first().map_or(0, |a| a.x.len()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        match &self.family {
            Family::Independent(m) => m.iter().all(Marginal::is_continuous),
            Family::MvNormal(_) => true,
            Family::JointPmf(_) => false,
        }
    }

    pub fn is_discrete(&self) -> bool {
        match &self.family {
            Family::Independent(m) => m.iter().all(|x| !x.is_continuous()),
            Family::MvNormal(_) => false,
            Family::JointPmf(_) => true,
        }
    }

    /// True when the inputs are mutually independent (a diagonal covariance counts).
    pub fn is_independent(&self) -> bool {
        match &self.family {
            Family::Independent(_) => true,
            Family::MvNormal(n) => (0..n.cov.len())
                .all(|i| (0..n.cov.len()).all(|j| i == j || n.cov[i][j] == 0.0)),
            Family::JointPmf(_) => false,
        }
    }

    /// True for independent uniforms on exactly `[-1,1]` (no transform needed).
    pub fn is_standard_uniform(&self) -> bool {
        match &self.family {
            Family::Independent(m) => m
                .iter()
                .all(|x| *x == Marginal::Uniform { a: -1.0, b: 1.0 }),
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidDistribution("distribution has no inputs".into()));
        }
        crate::game::Coalition::empty(d)?;
        match &self.family {
            Family::Independent(m) => {
                for (i, x) in m.iter().enumerate() {
                    x.validate(i + 1)?;
                }
            }
            Family::MvNormal(n) => validate_mvnormal(n)?,
            Family::JointPmf(atoms) => {
                if atoms.iter().any(|a| a.x.len() != d) {
                    return Err(Error::InvalidDistribution(
                        "joint pmf outcomes must all have the same length".into(),
                    ));
                }
                let mut xs: Vec<_> = atoms.iter().map(|a| &a.x).collect();
                xs.sort();
                if xs.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidDistribution(
                        "joint pmf lists an outcome twice".into(),
                    ));
                }
                check_pmf(atoms.iter().map(|a| &a.p.0)).map_err(Error::InvalidDistribution)?;
            }
        }
        if let Some(ord) = &self.ordering {
            let mut seen = vec![false; d];
            if ord.len() != d
                || ord.iter().any(|&k| {
                    k == 0 || k > d || std::mem::replace(&mut seen[k - 1], true)
                })
            {
                return Err(Error::InvalidDistribution(format!(
                    "ordering {ord:?} is not a permutation of 1..={d}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_mvnormal(n: &MvNormal) -> Result<()> {
    let d = n.mean.len();
    if n.cov.len() != d || n.cov.iter().any(|r| r.len() != d) {
        return Err(Error::InvalidDistribution(format!(
            "covariance must be {d}×{d} to match the mean"
        )));
    }
    if n.mean.iter().chain(n.cov.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite mvnormal parameter".into()));
    }
    for i in 0..d {
        for j in 0..i {
            if (n.cov[i][j] - n.cov[j][i]).abs() > 1e-12 * (1.0 + n.cov[i][j].abs()) {
                return Err(Error::AsymmetricMatrix { row: i + 1, col: j + 1 });
            }
        }
    }
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| n.cov[i][j]);
    if m.cholesky().is_none() {
        return Err(Error::SingularCovariance);
    }
    Ok(())
}
