//! Gauss-Legendre rules, tensor grids, and Galerkin projection.
//!
//! Weights are probability weights: they absorb the uniform density `½` per coordinate,
//! so every rule computes an expectation and its weights sum to 1.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis::Polynomial;
use crate::error::{Error, Result};

/// Largest number of tensor-grid nodes a rule may have.
pub const MAX_NODES: u64 = 100_000_000;

/// A one-dimensional rule on `(-1, 1)` with increasing nodes and positive weights.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_k f(x_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect();
        pairwise_sum(&terms)
    }
}

/// `P_m(x)` and `P'_m(x)` by recurrence.
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..m {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// The `points`-point Gauss-Legendre rule, exact for polynomials of degree `≤ 2·points − 1`.
///
/// Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi matrix
/// (Golub-Welsch), then are polished by Newton steps on `P_m`; weights are
/// recomputed as `1 / ((1 − x²) P'_m(x)²)`.
pub fn gauss_legendre(points: usize) -> Result<QuadratureRule> {
    if points == 0 {
        return Err(Error::EmptyRule);
    }
    if points == 1 {
        return Ok(QuadratureRule {
            nodes: vec![0.0],
            weights: vec![1.0],
        });
    }
    let m = points;
    let mut jacobi = DMatrix::zeros(m, m);
    for k in 1..m {
        let kf = k as f64;
        let b = kf / (4.0 * kf * kf - 1.0).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jacobi.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = legendre_with_derivative(m, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
    }
    // enforce exact symmetry about 0
    for i in 0..m / 2 {
        let s = 0.5 * (nodes[m - 1 - i] - nodes[i]);
        nodes[i] = -s;
        nodes[m - 1 - i] = s;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    let mut weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let (_, dp) = legendre_with_derivative(m, x);
            1.0 / ((1.0 - x * x) * dp * dp)
        })
        .collect();
    let total: f64 = pairwise_sum(&weights);
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Per-coordinate point count for projecting onto a degree-`deg_alpha` element when the
/// model is believed to have degree `model_degree_hint`: `⌈(deg_α + hint + 1)/2⌉ + 2`.
pub fn points_for(deg_alpha: u32, model_degree_hint: u32) -> usize {
    ((deg_alpha + model_degree_hint + 1) as usize).div_ceil(2) + 2
}

/// Tensor product of a one-dimensional rule, with nodes generated on demand.
#[derive(Clone, Debug)]
pub struct TensorRule {
    rule: QuadratureRule,
    d: usize,
    len: usize,
}

pub fn tensor_rule(rule1d: &QuadratureRule, d: usize) -> Result<TensorRule> {
    if d == 0 {
        return Err(Error::InvalidConfig("tensor rule needs d ≥ 1".into()));
    }
    if rule1d.is_empty() {
        return Err(Error::EmptyRule);
    }
    let points = rule1d.len();
    let too_many = || Error::TooManyNodes {
        points,
        d,
        limit: MAX_NODES,
    };
    let len = (points as u64).checked_pow(d as u32).ok_or_else(too_many)?;
    if len > MAX_NODES {
        return Err(too_many());
    }
    Ok(TensorRule {
        rule: rule1d.clone(),
        d,
        len: len as usize,
    })
}

impl TensorRule {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn rule1d(&self) -> &QuadratureRule {
        &self.rule
    }

    /// Node `k` (first coordinate varies fastest) written into `out`; returns its weight.
    pub fn node_into(&self, mut k: usize, out: &mut [f64]) -> f64 {
        let m = self.rule.len();
        let mut w = 1.0;
        for x in out.iter_mut().take(self.d) {
            let j = k % m;
            k /= m;
            *x = self.rule.nodes[j];
            w *= self.rule.weights[j];
        }
        w
    }

    pub fn node(&self, k: usize) -> (Vec<f64>, f64) {
        let mut x = vec![0.0; self.d];
        let w = self.node_into(k, &mut x);
        (x, w)
    }

    pub fn weight(&self, k: usize) -> f64 {
        let m = self.rule.len();
        let mut k = k;
        let mut w = 1.0;
        for _ in 0..self.d {
            w *= self.rule.weights[k % m];
            k /= m;
        }
        w
    }

    /// `Σ_k w_k f(x_k)`, evaluated in parallel and summed in a fixed order.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync,
    {
        let terms = (0..self.len)
            .into_par_iter()
            .map_init(
                || vec![0.0; self.d],
                |x, k| {
                    let w = self.node_into(k, x);
                    Ok(w * f(x)?)
                },
            )
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }

    /// Model values at every node, in node order; failures carry the node coordinates.
    pub fn evaluate<F>(&self, model: &F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
    {
        (0..self.len)
            .into_par_iter()
            .map(|k| {
                let (x, _) = self.node(k);
                model(&x).map_err(|e| wrap_model_error(&x, e))
            })
            .collect()
    }

    /// `Σ_k w_k · values_k · g(x_k)` for cached model values.
    pub fn project_values<G>(&self, values: &[f64], g: G) -> Result<f64>
    where
        G: Fn(&[f64]) -> Result<f64> + Sync,
    {
        if values.len() != self.len {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: self.len,
            });
        }
        let terms = (0..self.len)
            .into_par_iter()
            .map_init(
                || vec![0.0; self.d],
                |x, k| {
                    let w = self.node_into(k, x);
                    Ok(w * values[k] * g(x)?)
                },
            )
            .collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&terms))
    }
}

pub(crate) fn wrap_model_error(x: &[f64], e: Error) -> Error {
    match e {
        e @ Error::ModelEvaluation { .. } => e,
        other => Error::ModelEvaluation {
            point: x.to_vec(),
            message: other.to_string(),
        },
    }
}

/// `y_α ≈ Σ_k w_k · model(x_k) · Ψ_α(x_k)`.
pub fn galerkin_project<F>(model: &F, psi: &Polynomial<f64>, rule: &TensorRule) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    if psi.dim() != rule.dim() {
        return Err(Error::DimensionMismatch {
            expected: rule.dim(),
            found: psi.dim(),
        });
    }
    rule.integrate(|x| {
        let m = model(x).map_err(|e| wrap_model_error(x, e))?;
        Ok(m * psi.eval(x)?)
    })
}

/// Pairwise (cascade) summation; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs.len(), &|i| xs[i])
}

/// Pairwise summation of `f(0) + … + f(n−1)` without materializing the terms.
pub fn pairwise_sum_by(n: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 16 {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}
