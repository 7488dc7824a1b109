use nalgebra::DMatrix;

use super::normal::{normal_cdf, normal_quantile};
use super::{DistributionSpec, Family, Marginal};
use crate::error::{Error, Result};

/// Conditional law of the input at one position of the ordering.
#[derive(Clone, Debug)]
enum Conditional {
    Uniform { a: f64, b: f64 },
    /// `N(mu + coef·(x_prev − prev_mean), sigma²)` with `x_prev` the earlier positions.
    Normal {
        mu: f64,
        sigma: f64,
        coef: Vec<f64>,
        prev_mean: Vec<f64>,
    },
}

impl Conditional {
    fn location(&self, prev: &[f64]) -> f64 {
        match self {
            Conditional::Uniform { .. } => 0.0,
            Conditional::Normal {
                mu,
                coef,
                prev_mean,
                ..
            } => {
                mu + coef
                    .iter()
                    .zip(prev.iter().zip(prev_mean))
                    .map(|(c, (x, m))| c * (x - m))
                    .sum::<f64>()
            }
        }
    }

    fn cdf(&self, prev: &[f64], x: f64) -> f64 {
        match self {
            Conditional::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Conditional::Normal { sigma, .. } => normal_cdf((x - self.location(prev)) / sigma),
        }
    }

    /// `2F − 1`; affine for uniforms so that `[-1,1]` maps to itself exactly.
    fn to_unit(&self, prev: &[f64], x: f64) -> f64 {
        match self {
            Conditional::Uniform { a, b } => (2.0 * x - (a + b)) / (b - a),
            Conditional::Normal { .. } => 2.0 * self.cdf(prev, x) - 1.0,
        }
    }

    fn from_unit(&self, prev: &[f64], u: f64) -> f64 {
        match self {
            Conditional::Uniform { a, b } => 0.5 * (a + b) + 0.5 * (b - a) * u,
            Conditional::Normal { sigma, .. } => {
                self.location(prev) + sigma * normal_quantile(0.5 * (u + 1.0))
            }
        }
    }
}

/// `T(x)_k = 2·F_k(x_{o_k} | x_{o_1}, …, x_{o_{k−1}}) − 1` for an ordering `o`.
///
/// Output coordinate `k` belongs to input `o_k`; with the natural ordering the
/// coordinates line up with the inputs.
#[derive(Clone, Debug)]
pub struct Rosenblatt {
    spec: DistributionSpec,
    order: Vec<usize>,
    conditionals: Vec<Conditional>,
}

impl Rosenblatt {
    pub fn new(spec: &DistributionSpec) -> Result<Self> {
        if !spec.is_continuous() {
            return Err(Error::DiscreteUnsupported);
        }
        let order: Vec<usize> = spec.ordering().iter().map(|k| k - 1).collect();
        let conditionals = match spec.family() {
            Family::Independent(m) => order
                .iter()
                .map(|&j| match &m[j] {
                    Marginal::Uniform { a, b } => Conditional::Uniform { a: *a, b: *b },
                    Marginal::Normal { mu, sigma } => Conditional::Normal {
                        mu: *mu,
                        sigma: *sigma,
                        coef: Vec::new(),
                        prev_mean: Vec::new(),
                    },
                    _ => unreachable!("continuity checked"),
                })
                .collect(),
            Family::MvNormal(n) => {
                let cov = DMatrix::from_fn(n.cov.len(), n.cov.len(), |i, j| n.cov[i][j]);
                order
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| {
                        let prev = &order[..k];
                        let prev_mean: Vec<f64> = prev.iter().map(|&i| n.mean[i]).collect();
                        if prev.is_empty() {
                            return Ok(Conditional::Normal {
                                mu: n.mean[j],
                                sigma: cov[(j, j)].sqrt(),
                                coef: Vec::new(),
                                prev_mean,
                            });
                        }
                        let s_pp = DMatrix::from_fn(k, k, |r, c| cov[(prev[r], prev[c])]);
                        let s_pj = DMatrix::from_fn(k, 1, |r, _| cov[(prev[r], j)]);
                        let chol = s_pp.cholesky().ok_or(Error::SingularCovariance)?;
                        let coef = chol.solve(&s_pj);
                        let var = cov[(j, j)] - (s_pj.transpose() * &coef)[(0, 0)];
                        if var <= 0.0 {
                            return Err(Error::SingularCovariance);
                        }
                        Ok(Conditional::Normal {
                            mu: n.mean[j],
                            sigma: var.sqrt(),
                            coef: coef.iter().copied().collect(),
                            prev_mean,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Family::JointPmf(_) => unreachable!("continuity checked"),
        };
        Ok(Self {
            spec: spec.clone(),
            order,
            conditionals,
        })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// The ordering, 1-based.
    pub fn ordering(&self) -> Vec<usize> {
        self.order.iter().map(|k| k + 1).collect()
    }

    /// `F_k(x_k | prefix)` for position `k` (0-based) of the ordering, `prefix` holding
    /// the values of the earlier positions.
    pub fn conditional_cdf(&self, k: usize, prefix: &[f64], xk: f64) -> f64 {
        self.conditionals[k].cdf(&prefix[..k], xk)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut prev = Vec::with_capacity(self.dim());
        let mut u = Vec::with_capacity(self.dim());
        for (cond, &j) in self.conditionals.iter().zip(&self.order) {
            let xj = x[j];
            let outside = match cond {
                Conditional::Uniform { a, b } => !(xj >= *a && xj <= *b),
                Conditional::Normal { .. } => !xj.is_finite(),
            };
            if outside {
                return Err(Error::OutsideSupport {
                    index: j + 1,
                    value: xj,
                });
            }
            u.push(cond.to_unit(&prev, xj));
            prev.push(xj);
        }
        Ok(u)
    }

    pub fn inverse(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.dim()];
        self.inverse_into(u, &mut x)?;
        Ok(x)
    }

    /// [`Rosenblatt::inverse`] writing into `x` (indexed by input).
    pub fn inverse_into(&self, u: &[f64], x: &mut [f64]) -> Result<()> {
        self.check_len(u.len())?;
        let mut prev = Vec::with_capacity(self.dim());
        for (k, (cond, &j)) in self.conditionals.iter().zip(&self.order).enumerate() {
            let uk = u[k];
            if !(uk > -1.0 && uk < 1.0) {
                return Err(Error::BoundaryPoint {
                    index: k + 1,
                    value: uk,
                });
            }
            let xj = cond.from_unit(&prev, uk);
            x[j] = xj;
            prev.push(xj);
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}

/// `F_k(x_k | x_1, …, x_{k−1})` in the spec's ordering (`k` is the 1-based position).
pub fn marginal_cdf(spec: &DistributionSpec, k: usize, x_prefix: &[f64], x_k: f64) -> Result<f64> {
    let r = Rosenblatt::new(spec)?;
    if k == 0 || k > r.dim() {
        return Err(Error::IndexOutOfRange { index: k, d: r.dim() });
    }
    if x_prefix.len() < k - 1 {
        return Err(Error::LengthMismatch {
            left: x_prefix.len(),
            right: k - 1,
        });
    }
    Ok(r.conditional_cdf(k - 1, x_prefix, x_k))
}
