//! Special cases with polynomial-time or closed-form Shapley effects, used as oracles.

use nalgebra::DMatrix;

use super::coalition::{check_dim, Coalition};
use super::shapley::shapley_all;
use super::Game;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Shapley effects of `a + bᵀX` with independent inputs: `b_i² Var(X_i)`.
pub fn closed_form_linear<T: Scalar>(b: &[T], variances: &[T]) -> Result<Vec<T>> {
    if b.len() != variances.len() {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: variances.len(),
        });
    }
    Ok(b.iter()
        .zip(variances)
        .map(|(bi, v)| bi.clone() * bi.clone() * v.clone())
        .collect())
}

fn check_symmetric<T: Scalar>(w: &[Vec<T>]) -> Result<usize> {
    let d = w.len();
    for (i, row) in w.iter().enumerate() {
        if row.len() != d {
            return Err(Error::LengthMismatch {
                left: d,
                right: row.len(),
            });
        }
        for j in 0..i {
            if row[j] != w[j][i] {
                return Err(Error::AsymmetricMatrix { row: i + 1, col: j + 1 });
            }
        }
    }
    Ok(d)
}

/// The pairwise game `val(u) = Σ_{i∈u} Σ_{j∈u} w_ij` over ordered pairs
/// (off-diagonal weights count once per orientation).
pub fn graph_game<T: Scalar>(w: &[Vec<T>]) -> Result<Game<T>> {
    let d = check_symmetric(w)?;
    check_dim(d)?;
    Game::from_fn(d, |u| {
        let members = u.indices();
        let mut acc = T::zero();
        for &i in &members {
            for &j in &members {
                acc = acc + w[i - 1][j - 1].clone();
            }
        }
        acc
    })
}

/// Shapley values of [`graph_game`]: `w_ii + Σ_{j≠i} w_ij`.
pub fn closed_form_graph<T: Scalar>(w: &[Vec<T>]) -> Result<Vec<T>> {
    let d = check_symmetric(w)?;
    Ok((0..d)
        .map(|i| {
            let mut acc = w[i][i].clone();
            for j in (0..d).filter(|&j| j != i) {
                acc = acc + w[i][j].clone();
            }
            acc
        })
        .collect())
}

fn covariance_matrix(sigma: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = sigma.len();
    for (i, row) in sigma.iter().enumerate() {
        if row.len() != d {
            return Err(Error::LengthMismatch {
                left: d,
                right: row.len(),
            });
        }
        for j in 0..i {
            if (row[j] - sigma[j][i]).abs() > 1e-12 * (1.0 + row[j].abs()) {
                return Err(Error::AsymmetricMatrix { row: i + 1, col: j + 1 });
            }
        }
    }
    let m = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
    if m.clone().cholesky().is_none() {
        return Err(Error::SingularCovariance);
    }
    Ok(m)
}

fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// `Var(E[bᵀX | X_u])` for `X ~ N(μ, Σ)`, via the Schur complement
/// `Var(bᵀX) − b_ūᵀ (Σ_ūū − Σ_ūu Σ_uu⁻¹ Σ_uū) b_ū`.
fn gaussian_value(b: &[f64], sigma: &DMatrix<f64>, u: Coalition) -> Result<f64> {
    let d = b.len();
    let bv = nalgebra::DVector::from_column_slice(b);
    let total = (bv.transpose() * sigma * &bv)[(0, 0)];
    if u.is_empty() {
        return Ok(0.0);
    }
    let inside: Vec<usize> = u.indices().iter().map(|i| i - 1).collect();
    let outside: Vec<usize> = (0..d).filter(|i| !inside.contains(i)).collect();
    if outside.is_empty() {
        return Ok(total);
    }
    let s_oo = select(sigma, &outside, &outside);
    let s_ou = select(sigma, &outside, &inside);
    let s_uu = select(sigma, &inside, &inside);
    let chol = s_uu.cholesky().ok_or(Error::SingularCovariance)?;
    let cond = s_oo - &s_ou * chol.solve(&s_ou.transpose());
    let b_out = nalgebra::DVector::from_fn(outside.len(), |k, _| b[outside[k]]);
    let residual = (b_out.transpose() * cond * &b_out)[(0, 0)];
    Ok(total - residual)
}

/// The relative-importance game of the linear Gaussian model `a + bᵀX`, `X ~ N(μ, Σ)`.
pub fn linear_gaussian_game(b: &[f64], sigma: &[Vec<f64>]) -> Result<Game<f64>> {
    if b.len() != sigma.len() {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: sigma.len(),
        });
    }
    check_dim(b.len())?;
    let m = covariance_matrix(sigma)?;
    let full = Coalition::full(b.len())?;
    let mut values = vec![0.0; 1usize << b.len()];
    for u in full.subsets() {
        values[u.bits() as usize] = gaussian_value(b, &m, u)?;
    }
    Game::from_values(b.len(), values)
}

/// Shapley effects of the linear Gaussian model (Owen–Prieur): the Shapley value of
/// [`linear_gaussian_game`], whose coalition values are conditional-covariance sums.
pub fn closed_form_linear_gaussian(b: &[f64], mu: &[f64], sigma: &[Vec<f64>]) -> Result<Vec<f64>> {
    if mu.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: mu.len(),
        });
    }
    let game = linear_gaussian_game(b, sigma)?;
    Ok(shapley_all(&game))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::shapley;
    use crate::scalar::Rational;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn linear_examples() {
        assert_eq!(closed_form_linear(&[1.0, 2.0], &[1.0, 1.0]).unwrap(), vec![1.0, 4.0]);
        assert_eq!(
            closed_form_linear(&vec![q(1, 1); 3], &vec![q(1, 3); 3]).unwrap(),
            vec![q(1, 3); 3]
        );
        assert_eq!(closed_form_linear(&[0.0, 3.0], &[5.0, 1.0]).unwrap()[0], 0.0);
        assert!(matches!(
            closed_form_linear(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_edge_matches_brute_force() {
        let w = vec![vec![q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1)]];
        let g = graph_game(&w).unwrap();
        let closed = closed_form_graph(&w).unwrap();
        assert_eq!(closed, vec![q(1, 1), q(1, 1)]);
        for i in 1..=2 {
            assert_eq!(shapley(&g, i).unwrap(), closed[i - 1]);
        }
    }

    #[test]
    fn diagonal_only_graph() {
        let w = vec![
            vec![q(2, 1), q(0, 1), q(0, 1)],
            vec![q(0, 1), q(5, 3), q(0, 1)],
            vec![q(0, 1), q(0, 1), q(1, 7)],
        ];
        assert_eq!(closed_form_graph(&w).unwrap(), vec![q(2, 1), q(5, 3), q(1, 7)]);
    }

    #[test]
    fn asymmetric_graph_rejected() {
        let w = vec![vec![0.0, 1.0], vec![2.0, 0.0]];
        assert!(matches!(
            closed_form_graph(&w),
            Err(Error::AsymmetricMatrix { row: 2, col: 1 })
        ));
    }

    #[test]
    fn identity_covariance_reduces_to_linear() {
        let b = [1.5, -2.0, 0.5];
        let eye: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let sh = closed_form_linear_gaussian(&b, &[0.0; 3], &eye).unwrap();
        for (s, bi) in sh.iter().zip(b) {
            assert!((s - bi * bi).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_covariance_rejected() {
        let sigma = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(
            closed_form_linear_gaussian(&[1.0, 1.0], &[0.0, 0.0], &sigma),
            Err(Error::SingularCovariance)
        ));
    }

    #[test]
    fn bivariate_values() {
        // X1 + X2 with correlation ρ: val({1}) = val({2}) = (1+ρ)², total 2+2ρ.
        let rho = 0.5;
        let sigma = vec![vec![1.0, rho], vec![rho, 1.0]];
        let g = linear_gaussian_game(&[1.0, 1.0], &sigma).unwrap();
        let one = Coalition::from_indices(2, &[1]).unwrap();
        assert!((g.value(one) - 2.25).abs() < 1e-12);
        assert!((g.full_value() - 3.0).abs() < 1e-12);
        let sh = closed_form_linear_gaussian(&[1.0, 1.0], &[0.0, 0.0], &sigma).unwrap();
        assert!((sh[0] - 1.5).abs() < 1e-12 && (sh[1] - 1.5).abs() < 1e-12);
    }
}
