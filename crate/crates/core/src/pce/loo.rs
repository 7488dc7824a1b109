//! Leave-one-out validation of a least-squares PCE fit.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::{Basis, MultiIndex};
use crate::error::{Error, Result};
use crate::quadrature::wrap_model_error;
use crate::transform::{DistributionSpec, Rosenblatt};

#[derive(Clone, Debug, PartialEq)]
pub struct LooResult {
    /// `(1/N) Σ_k (M(x_k) − M̂_{∼k}(x_k))²`.
    pub l1o: f64,
    /// Sample variance of the model outputs.
    pub sigma2: f64,
    /// `1 − l1o/σ̂²` (1 for a constant model).
    pub q2: f64,
}

/// Least-squares fit of `model` on `basis` at `samples` (points in input space) and its
/// leave-one-out error, using `r_k / (1 − h_k)` with `h` the hat-matrix diagonal.
pub fn loo_validate<F>(
    model: &F,
    dist: &DistributionSpec,
    samples: &[Vec<f64>],
    basis: &[MultiIndex],
) -> Result<LooResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let n = samples.len();
    let p = basis.len();
    if n < 10 {
        return Err(Error::DegenerateRegression(format!("need at least 10 samples, got {n}")));
    }
    if n <= p {
        return Err(Error::DegenerateRegression(format!(
            "{n} samples cannot fit {p} basis terms"
        )));
    }
    let ros = Rosenblatt::new(dist)?;
    let legendre = Basis::legendre(dist.dim());
    let rows = samples
        .par_iter()
        .map(|x| {
            let y = model(x).map_err(|e| wrap_model_error(x, e))?;
            let u = ros.forward(x)?;
            let row = basis
                .iter()
                .map(|a| legendre.eval(a, &u))
                .collect::<Result<Vec<f64>>>()?;
            Ok((y, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_fn(n, p, |i, j| rows[i].1[j]);
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.0));

    let qr = a.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().amax().max(f64::MIN_POSITIVE);
    if r.diagonal().iter().any(|v| v.abs() <= 1e-12 * scale) {
        return Err(Error::DegenerateRegression("design matrix is rank deficient".into()));
    }
    let q = qr.q();
    let coef = r
        .solve_upper_triangular(&(q.transpose() * &y))
        .ok_or_else(|| Error::DegenerateRegression("singular triangular factor".into()))?;
    let resid = &y - &a * coef;

    let mut l1o = 0.0;
    for k in 0..n {
        let h = q.row(k).norm_squared();
        let denom = 1.0 - h;
        let e = if denom.abs() < 1e-12 { 0.0 } else { resid[k] / denom };
        l1o += e * e;
    }
    l1o /= n as f64;
    let mean = y.mean();
    let sigma2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let q2 = if sigma2 > 0.0 { 1.0 - l1o / sigma2 } else { 1.0 };
    Ok(LooResult { l1o, sigma2, q2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn samples(n: usize, d: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    #[test]
    fn exact_fit_has_zero_error() {
        let model = |x: &[f64]| Ok(x[0] + x[0] * x[1]);
        let dist = DistributionSpec::uniform(2);
        let r = loo_validate(&model, &dist, &samples(50, 2), &MultiIndex::graded(2, 2)).unwrap();
        assert!(r.l1o <= 1e-10, "{}", r.l1o);
        assert!((r.q2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_model() {
        let model = |_: &[f64]| Ok(3.0);
        let dist = DistributionSpec::uniform(2);
        let r = loo_validate(&model, &dist, &samples(20, 2), &MultiIndex::graded(2, 1)).unwrap();
        assert!(r.l1o < 1e-20);
        assert_eq!(r.q2, 1.0);
    }

    #[test]
    fn misfit_registers() {
        let model = |x: &[f64]| Ok(x[0] + x[0] * x[1]);
        let dist = DistributionSpec::uniform(2);
        let basis: Vec<MultiIndex> = MultiIndex::graded(2, 2)
            .into_iter()
            .filter(|a| a.degrees() != [1, 1])
            .collect();
        let r = loo_validate(&model, &dist, &samples(200, 2), &basis).unwrap();
        assert!(r.l1o > 1e-3);
        assert!(r.q2 < 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        let model = |x: &[f64]| Ok(x[0]);
        let dist = DistributionSpec::uniform(2);
        assert!(matches!(
            loo_validate(&model, &dist, &samples(5, 2), &MultiIndex::graded(2, 1)),
            Err(Error::DegenerateRegression(_))
        ));
        assert!(matches!(
            loo_validate(&model, &dist, &samples(12, 2), &MultiIndex::graded(2, 4)),
            Err(Error::DegenerateRegression(_))
        ));
    }
}
