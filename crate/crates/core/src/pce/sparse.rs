//! The adaptive sparse construction: rings of q-norm candidates, a waiting set for
//! small coefficients, and the truncation-error stoppage criterion.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Pce, QNorm, VARIANCE_TOLERANCE};
use crate::basis::{legendre_normalized_values, MultiIndex};
use crate::error::{Error, Result};
use crate::quadrature::{
    gauss_legendre, pairwise_sum_by, points_for, tensor_rule, wrap_model_error, TensorRule,
};
use crate::transform::{DistributionSpec, Rosenblatt};

/// Relative size of the roundoff floor `κ` below which a coefficient is treated as zero.
const ROUNDOFF_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct SparseConfig {
    pub q: QNorm,
    /// Target truncation-error variance `ω` (or tail probability with `use_chebyshev`).
    pub epsilon: f64,
    /// Coefficients at least this large are admitted immediately; default `1e-8·√σ̂²`.
    pub kappa_coeff: Option<f64>,
    pub p_max: u32,
    /// Stop on the Chebyshev tail `(σ̂² − Σy²)²/t² < epsilon` instead of `σ̂² − Σy² < epsilon`.
    pub use_chebyshev: bool,
    pub chebyshev_t: f64,
    /// Believed polynomial degree of the model (per coordinate), used to size rules.
    pub degree_hint: u32,
    /// Whether `degree_hint` is exact, which makes quadrature coefficients exact up to
    /// roundoff and enables the roundoff floor.
    pub exact_degree: bool,
    pub seed: u64,
    pub mc_samples: usize,
}

impl Default for SparseConfig {
    fn default() -> Self {
        Self {
            q: QNorm::total_degree(),
            epsilon: 1e-8,
            kappa_coeff: None,
            p_max: 10,
            use_chebyshev: false,
            chebyshev_t: 1e-2,
            degree_hint: 10,
            exact_degree: false,
            seed: 0,
            mc_samples: 100_000,
        }
    }
}

impl SparseConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if let Some(k) = self.kappa_coeff {
            if !(k > 0.0) {
                return bad("kappa_coeff must be positive");
            }
        }
        if self.use_chebyshev && !(self.chebyshev_t > 0.0) {
            return bad("chebyshev t must be positive");
        }
        if self.mc_samples < 2 {
            return bad("need at least two Monte Carlo samples");
        }
        Ok(())
    }
}

/// How σ̂² was obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum VarianceMethod {
    Quadrature { points_per_axis: usize, nodes: usize },
    MonteCarlo { samples: usize, seed: u64, std_error: f64 },
}

/// One iteration of the sparse construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RingLog {
    pub p: u32,
    pub candidates: usize,
    /// Terms admitted because `|y| ≥ kappa_coeff`.
    pub admitted: Vec<MultiIndex>,
    /// The waiting-set maximum admitted this iteration.
    pub from_waiting: Option<MultiIndex>,
    /// Terms below the roundoff floor, dropped.
    pub withheld: usize,
    pub waiting: usize,
    pub retained_variance: f64,
    pub epsilon_l: f64,
}

/// Model values on a tensor grid plus the 1-D basis table at its nodes.
struct Grid {
    rule: TensorRule,
    values: Vec<f64>,
    /// `table[j][i] = P̃_j(node_i)`.
    table: Vec<Vec<f64>>,
}

impl Grid {
    fn new<G>(m: usize, d: usize, max_degree: u32, g: &G) -> Result<Self>
    where
        G: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let rule = tensor_rule(&gauss_legendre(m)?, d)?;
        let values = rule.evaluate(g)?;
        let nodes = &rule.rule1d().nodes;
        let per_node: Vec<Vec<f64>> = nodes
            .iter()
            .map(|&x| legendre_normalized_values(x, max_degree))
            .collect();
        let table = (0..=max_degree as usize)
            .map(|j| per_node.iter().map(|v| v[j]).collect())
            .collect();
        Ok(Self { rule, values, table })
    }

    fn points(&self) -> usize {
        self.rule.rule1d().len()
    }

    /// `Σ_k w_k g(x_k) Ψ_α(x_k)`.
    fn project(&self, alpha: &MultiIndex) -> f64 {
        let m = self.points();
        let w1 = &self.rule.rule1d().weights;
        let degs = alpha.degrees();
        pairwise_sum_by(self.rule.len(), &|k| {
            let mut k = k;
            let mut acc = self.values[k];
            for &a in degs {
                let i = k % m;
                k /= m;
                acc *= w1[i] * self.table[a as usize][i];
            }
            acc
        })
    }

    /// `(E[g], E[g²])`.
    fn moments(&self) -> (f64, f64) {
        let mean = self.project(&MultiIndex::zero(self.rule.dim()));
        let second = pairwise_sum_by(self.rule.len(), &|k| {
            self.rule.weight(k) * self.values[k] * self.values[k]
        });
        (mean, second)
    }
}

/// Builds a sparse PCE of `model` (a function of the original inputs) under `dist`.
///
/// The model is pulled back to `[-1,1]^d` through the inverse Rosenblatt transform.
/// Each ring `p = 1, 2, …` projects the multi-indices whose q-norm is `≤ p` but not
/// `≤ p−1`; coefficients with `|y| ≥ kappa_coeff` are admitted, those below the
/// roundoff floor are dropped, the rest wait, and the largest waiting coefficient
/// is admitted every ring. Iteration stops once `σ̂² − Σ y² < epsilon` (checked
/// before the first ring as well) or after ring `p_max`, in which case the result
/// is returned with `converged = false`.
pub fn build_sparse<F>(model: &F, dist: &DistributionSpec, cfg: &SparseConfig) -> Result<Pce>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    cfg.validate()?;
    if !dist.is_continuous() {
        return Err(Error::DiscreteUnsupported);
    }
    let d = dist.dim();
    let ros = Rosenblatt::new(dist)?;
    let natural: Vec<usize> = (1..=d).collect();
    let identity = dist.is_standard_uniform() && ros.ordering() == natural;
    let g = |u: &[f64]| -> Result<f64> {
        if identity {
            model(u)
        } else {
            let x = ros.inverse(u)?;
            model(&x).map_err(|e| wrap_model_error(&x, e))
        }
    };

    let hint = cfg.degree_hint;
    let p_max = cfg.p_max;
    let m_full = points_for(p_max, hint).max(hint as usize + 3);

    // One grid sized for every ring when it fits; otherwise per-ring grids and a
    // Monte Carlo σ̂².
    let mut grids: HashMap<usize, Grid> = HashMap::new();
    let single = match Grid::new(m_full, d, p_max, &g) {
        Ok(grid) => {
            grids.insert(m_full, grid);
            true
        }
        Err(Error::TooManyNodes { .. }) => false,
        Err(e) => return Err(e),
    };
    let grid_points = |p: u32| if single { m_full } else { points_for(p, hint) };

    let (sigma2, second_moment, method, slack) = if single {
        let grid = &grids[&m_full];
        let (mean, second) = grid.moments();
        let method = VarianceMethod::Quadrature {
            points_per_axis: m_full,
            nodes: grid.rule.len(),
        };
        ((second - mean * mean).max(0.0), second, method, 0.0)
    } else {
        let (var, second, se) = monte_carlo_variance(&g, d, cfg.mc_samples, cfg.seed)?;
        let method = VarianceMethod::MonteCarlo {
            samples: cfg.mc_samples,
            seed: cfg.seed,
            std_error: se,
        };
        (var, second, method, 3.0 * se)
    };

    let kappa_coeff = cfg.kappa_coeff.unwrap_or(1e-8 * sigma2.sqrt());
    let floor = cfg
        .exact_degree
        .then(|| ROUNDOFF_FLOOR * second_moment.sqrt());
    let bessel_limit = sigma2 + VARIANCE_TOLERANCE * sigma2.max(1.0) + slack;
    let stop = |retained: f64| {
        let e = (sigma2 - retained).max(0.0);
        if cfg.use_chebyshev {
            e * e / (cfg.chebyshev_t * cfg.chebyshev_t) < cfg.epsilon
        } else {
            sigma2 - retained < cfg.epsilon
        }
    };

    let zero = MultiIndex::zero(d);
    let m0 = grid_points(0);
    if !grids.contains_key(&m0) {
        grids.insert(m0, Grid::new(m0, d, p_max, &g)?);
    }
    let mut coeffs = BTreeMap::new();
    coeffs.insert(zero, grids[&m0].project(&MultiIndex::zero(d)));

    let mut retained = 0.0;
    let mut waiting: Vec<(MultiIndex, f64)> = Vec::new();
    let mut log = Vec::new();
    let mut converged = stop(retained);

    let mut p = 0;
    while !converged && p < p_max {
        p += 1;
        let candidates: Vec<MultiIndex> = MultiIndex::graded(d, p)
            .into_iter()
            .filter(|a| cfg.q.admits(a.degrees(), p) && !cfg.q.admits(a.degrees(), p - 1))
            .collect();
        let m = grid_points(p);
        if !grids.contains_key(&m) {
            grids.insert(m, Grid::new(m, d, p_max, &g)?);
        }
        let grid = &grids[&m];
        let ys: Vec<f64> = candidates.par_iter().map(|a| grid.project(a)).collect();

        let mut entry = RingLog {
            p,
            candidates: candidates.len(),
            admitted: Vec::new(),
            from_waiting: None,
            withheld: 0,
            waiting: 0,
            retained_variance: 0.0,
            epsilon_l: 0.0,
        };
        for (alpha, y) in candidates.into_iter().zip(ys) {
            if y.abs() >= kappa_coeff {
                retained += y * y;
                entry.admitted.push(alpha.clone());
                coeffs.insert(alpha, y);
            } else if floor.is_some_and(|k| y.abs() < k) {
                entry.withheld += 1;
            } else {
                waiting.push((alpha, y));
            }
        }
        let best = waiting
            .iter()
            .enumerate()
            .fold(None::<(usize, f64)>, |acc, (i, (_, y))| match acc {
                Some((_, b)) if b >= y.abs() => acc,
                _ => Some((i, y.abs())),
            });
        if let Some((i, _)) = best {
            let (alpha, y) = waiting.remove(i);
            retained += y * y;
            entry.from_waiting = Some(alpha.clone());
            coeffs.insert(alpha, y);
        }
        if retained > bessel_limit {
            return Err(Error::InconsistentVariance { sigma2, retained });
        }
        entry.waiting = waiting.len();
        entry.retained_variance = retained;
        entry.epsilon_l = (sigma2 - retained).max(0.0);
        log.push(entry);
        converged = stop(retained);
    }

    Ok(Pce {
        d,
        distribution: dist.clone(),
        coeffs,
        sigma2_estimate: sigma2,
        converged,
        epsilon: cfg.epsilon,
        log,
        sigma2_method: Some(method),
    })
}

/// `(variance, second moment, standard error of the variance)` from seeded uniform samples.
fn monte_carlo_variance<G>(g: &G, d: usize, n: usize, seed: u64) -> Result<(f64, f64, f64)>
where
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| loop {
                    let u: f64 = rng.random_range(-1.0..1.0);
                    if u > -1.0 {
                        break u;
                    }
                })
                .collect()
        })
        .collect();
    let values = points
        .par_iter()
        .map(|u| g(u))
        .collect::<Result<Vec<f64>>>()?;
    let nf = n as f64;
    let mean = pairwise_sum_by(n, &|i| values[i]) / nf;
    let m2 = pairwise_sum_by(n, &|i| (values[i] - mean).powi(2)) / nf;
    let m4 = pairwise_sum_by(n, &|i| (values[i] - mean).powi(4)) / nf;
    let second = pairwise_sum_by(n, &|i| values[i] * values[i]) / nf;
    let var = m2 * nf / (nf - 1.0);
    let se = ((m4 - m2 * m2).max(0.0) / nf).sqrt();
    Ok((var, second, se))
}
