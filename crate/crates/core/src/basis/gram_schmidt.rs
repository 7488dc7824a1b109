use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::{Basis, MultiIndex, Polynomial, Weight};
use crate::error::{Error, Result};

/// Condition number above which the moment matrix is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Orthonormalizes the first `count` monomials (in enumeration order) under the inner
/// product `⟨X^α, X^β⟩ = μ^{α+β}`.
///
/// Uses modified Gram-Schmidt with one re-orthogonalization pass. Element `k` has leading
/// monomial `k`, so the change of basis from monomials is triangular.
pub fn gram_schmidt_from_moments(moments: &BTreeMap<MultiIndex, f64>, count: usize) -> Result<Basis> {
    let d = moments
        .keys()
        .next()
        .map(MultiIndex::dim)
        .ok_or_else(|| Error::MissingMoment("(empty moment map)".into()))?;
    if count == 0 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    let mut monomials = Vec::with_capacity(count);
    let mut deg = 0;
    while monomials.len() < count {
        monomials.extend(MultiIndex::of_total_degree(d, deg));
        deg += 1;
    }
    monomials.truncate(count);

    let mut gram = DMatrix::zeros(count, count);
    for i in 0..count {
        for j in 0..=i {
            let key = monomials[i].add(&monomials[j])?;
            let m = *moments
                .get(&key)
                .ok_or_else(|| Error::MissingMoment(key.to_string()))?;
            gram[(i, j)] = m;
            gram[(j, i)] = m;
        }
    }
    let eig = gram.clone().symmetric_eigen().eigenvalues;
    let lo = eig.min();
    let hi = eig.max();
    if lo <= 0.0 {
        let condition = if lo == 0.0 { f64::INFINITY } else { hi / lo };
        return Err(Error::IndefiniteMoments { condition });
    }
    let condition = hi / lo;
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedMoments { condition });
    }

    let inner = |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * &gram * b)[(0, 0)];
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let mut v = DVector::zeros(count);
        v[k] = 1.0;
        for _pass in 0..2 {
            for qj in &q {
                let c = inner(&v, qj);
                v -= qj * c;
            }
        }
        let n2 = inner(&v, &v);
        if n2 <= 0.0 {
            return Err(Error::IndefiniteMoments { condition });
        }
        v /= n2.sqrt();
        q.push(v);
    }

    let elements = q
        .iter()
        .zip(&monomials)
        .map(|(coeffs, lead)| {
            let p = Polynomial::from_terms(
                d,
                monomials.iter().cloned().zip(coeffs.iter().copied()),
            )?;
            Ok((lead.clone(), p))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Basis::from_elements(d, Weight::Moments(moments.clone()), elements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{expectation, legendre, normalize};

    fn univariate(ms: &[f64]) -> BTreeMap<MultiIndex, f64> {
        ms.iter()
            .enumerate()
            .map(|(k, &m)| (MultiIndex::new(vec![k as u32]), m))
            .collect()
    }

    fn uniform_moments(n: usize) -> BTreeMap<MultiIndex, f64> {
        let ms: Vec<f64> = (0..n)
            .map(|k| if k % 2 == 1 { 0.0 } else { 1.0 / (k as f64 + 1.0) })
            .collect();
        univariate(&ms)
    }

    #[test]
    fn uniform_moments_give_legendre() {
        let b = gram_schmidt_from_moments(&uniform_moments(7), 4).unwrap();
        for (k, (lead, p)) in b.elements().iter().enumerate() {
            assert_eq!(lead.degrees(), &[k as u32]);
            let want = normalize(&legendre(k as u32), &Weight::Uniform).unwrap();
            assert!(p.approx_eq(&want, 1e-10), "{k}: {p:?} vs {want:?}");
        }
    }

    #[test]
    fn count_one_is_constant() {
        let b = gram_schmidt_from_moments(&uniform_moments(1), 1).unwrap();
        assert_eq!(b.elements().len(), 1);
        assert!(b.elements()[0].1.approx_eq(&Polynomial::constant(1, 1.0), 1e-15));
    }

    #[test]
    fn normal_moments_give_hermite() {
        // probabilists' Hermite He_0..He_3 = 1, x, x²−1, x³−3x with ‖He_n‖² = n!
        let b = gram_schmidt_from_moments(&univariate(&[1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0]), 4)
            .unwrap();
        let he = [
            vec![(0, 1.0)],
            vec![(1, 1.0)],
            vec![(2, 1.0), (0, -1.0)],
            vec![(3, 1.0), (1, -3.0)],
        ];
        let fact = [1.0, 1.0, 2.0, 6.0f64];
        for (k, terms) in he.iter().enumerate() {
            let want = Polynomial::from_terms(
                1,
                terms
                    .iter()
                    .map(|&(e, c)| (MultiIndex::new(vec![e]), c / fact[k].sqrt())),
            )
            .unwrap();
            assert!(b.elements()[k].1.approx_eq(&want, 1e-10), "He_{k}");
        }
    }

    #[test]
    fn triangular_and_orthonormal_in_2d() {
        let mut moments = BTreeMap::new();
        for a in MultiIndex::graded(2, 6) {
            moments.insert(a.clone(), crate::basis::Weight::Uniform.moment(&a).unwrap());
        }
        let b = gram_schmidt_from_moments(&moments, 10).unwrap();
        let all = MultiIndex::graded(2, 3);
        for (k, (lead, p)) in b.elements().iter().enumerate() {
            assert_eq!(lead, &all[k]);
            assert!(p.coeff(lead).abs() > 1e-8);
            for later in &all[k + 1..] {
                assert_eq!(p.coeff(later), 0.0);
            }
            for (_, r) in b.elements() {
                let ip = expectation(&p.mul(r).unwrap(), b.weight()).unwrap();
                assert!(ip.abs() < 1e-10 || (ip - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_moments() {
        // point mass at 0: μ = (1, 0, 0, …) is singular
        assert!(matches!(
            gram_schmidt_from_moments(&univariate(&[1.0, 0.0, 0.0]), 2),
            Err(Error::IndefiniteMoments { .. })
        ));
        assert!(matches!(
            gram_schmidt_from_moments(&univariate(&[1.0, 0.0]), 2),
            Err(Error::MissingMoment(_))
        ));
        // Hilbert-like moments on [0,1] become ill-conditioned quickly
        let hilbert: Vec<f64> = (0..24).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        assert!(matches!(
            gram_schmidt_from_moments(&univariate(&hilbert), 12),
            Err(Error::IllConditionedMoments { .. }) | Err(Error::IndefiniteMoments { .. })
        ));
    }
}
