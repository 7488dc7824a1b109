//! Exact variance games for finite discrete inputs by enumerating the joint pmf.

use std::collections::HashMap;

use num_traits::Zero;
use rayon::prelude::*;

use super::ast::Expr;
use crate::error::{Error, Result};
use crate::game::{Coalition, Game};
use crate::scalar::Rational;
use crate::transform::{DistributionSpec, Family};

/// Largest number of joint outcomes enumerated.
pub const MAX_OUTCOMES: u64 = 1 << 24;
/// Largest `outcomes · 2^d` (one conditional-expectation pass per coalition).
pub const MAX_WORK: u64 = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteGameResult {
    /// `val(u) = Var(E[Y | X_u])`.
    pub game: Game<Rational>,
    pub mean: Rational,
    pub variance: Rational,
}

struct Outcome {
    /// Per-coordinate value codes (equal codes ⇔ equal values).
    codes: Vec<u32>,
    p: Rational,
    y: Rational,
}

/// `(value codes, values, probability)`.
type JointAtom = (Vec<u32>, Vec<Rational>, Rational);

/// Joint outcomes, zero-probability atoms dropped.
fn joint_outcomes(dist: &DistributionSpec) -> Result<Vec<JointAtom>> {
    let d = dist.dim();
    let one = Rational::from_integer(1.into());
    let out = match dist.family() {
        Family::MvNormal(_) => return Err(Error::ContinuousUnsupported),
        Family::Independent(marginals) => {
            if marginals.iter().any(|m| m.is_continuous()) {
                return Err(Error::ContinuousUnsupported);
            }
            let atoms: Vec<Vec<(Rational, Rational)>> = marginals
                .iter()
                .map(|m| m.atoms().map(|a| a.into_iter().filter(|(_, p)| !p.is_zero()).collect()))
                .collect::<Result<_>>()?;
            let count = atoms
                .iter()
                .try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64))
                .unwrap_or(u64::MAX);
            check_guards(count, d)?;
            for (k, a) in atoms.iter().enumerate() {
                let total: Rational = a.iter().map(|(_, p)| p.clone()).sum();
                if total != one {
                    return Err(Error::InvalidDistribution(format!(
                        "input {}: probabilities sum to {total}, not exactly 1",
                        k + 1
                    )));
                }
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut idx = vec![0usize; d];
            loop {
                let codes: Vec<u32> = idx.iter().map(|&i| i as u32).collect();
                let values = idx.iter().enumerate().map(|(k, &i)| atoms[k][i].0.clone()).collect();
                let p = idx
                    .iter()
                    .enumerate()
                    .fold(one.clone(), |acc, (k, &i)| acc * &atoms[k][i].1);
                out.push((codes, values, p));
                // mixed-radix increment, first coordinate fastest
                let mut k = 0;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < atoms[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
            out
        }
        Family::JointPmf(table) => {
            let table: Vec<_> = table.iter().filter(|a| !a.p.0.is_zero()).collect();
            check_guards(table.len() as u64, d)?;
            let total: Rational = table.iter().map(|a| a.p.0.clone()).sum();
            if total != one {
                return Err(Error::InvalidDistribution(format!(
                    "joint pmf sums to {total}, not exactly 1"
                )));
            }
            let mut dictionaries: Vec<HashMap<&Rational, u32>> = vec![HashMap::new(); d];
            table
                .iter()
                .map(|atom| {
                    let codes = atom
                        .x
                        .iter()
                        .zip(dictionaries.iter_mut())
                        .map(|(v, dict)| {
                            let next = dict.len() as u32;
                            *dict.entry(&v.0).or_insert(next)
                        })
                        .collect();
                    let values = atom.x.iter().map(|v| v.0.clone()).collect();
                    (codes, values, atom.p.0.clone())
                })
                .collect()
        }
    };
    Ok(out)
}

fn check_guards(outcomes: u64, d: usize) -> Result<()> {
    if outcomes > MAX_OUTCOMES {
        return Err(Error::TooManyOutcomes {
            outcomes,
            limit: MAX_OUTCOMES,
        });
    }
    if outcomes.saturating_mul(1u64 << d) > MAX_WORK {
        return Err(Error::TooManyOutcomes {
            outcomes,
            limit: MAX_WORK >> d,
        });
    }
    Ok(())
}

/// `val(u) = Var(E[Y|X_u])` for every coalition, exactly, by grouping outcomes on `X_u`:
/// `val(u) = Σ_g (Σ_{o∈g} p_o y_o)² / P(g) − μ²`.
pub fn exact_game(expr: &Expr, dist: &DistributionSpec) -> Result<DiscreteGameResult> {
    let d = dist.dim();
    if expr.max_var() > d {
        return Err(Error::UnknownIdentifier(format!("x{}", expr.max_var())));
    }
    if let Some(f) = expr.irrational_function() {
        return Err(Error::NotRational(f.name().to_string()));
    }
    Coalition::full(d)?;
    let outcomes: Vec<Outcome> = joint_outcomes(dist)?
        .into_par_iter()
        .map(|(codes, values, p)| {
            Ok(Outcome {
                codes,
                y: expr.eval_exact(&values)?,
                p,
            })
        })
        .collect::<Result<_>>()?;
    let mean: Rational = outcomes.iter().map(|o| &o.p * &o.y).sum();
    let mean_sq = &mean * &mean;
    let values: Vec<Rational> = (0u32..(1u32 << d))
        .into_par_iter()
        .map(|bits| {
            if bits == 0 {
                return Rational::zero();
            }
            let members: Vec<usize> = (0..d).filter(|k| bits >> k & 1 == 1).collect();
            let mut groups: HashMap<Vec<u32>, (Rational, Rational)> = HashMap::new();
            for o in &outcomes {
                let key = members.iter().map(|&k| o.codes[k]).collect();
                let g = groups.entry(key).or_insert_with(|| (Rational::zero(), Rational::zero()));
                g.0 += &o.p;
                g.1 += &o.p * &o.y;
            }
            // order-independent: exact arithmetic
            let second: Rational = groups.into_values().map(|(p, s)| &s * &s / p).sum();
            second - &mean_sq
        })
        .collect();
    let variance = values[values.len() - 1].clone();
    Ok(DiscreteGameResult {
        game: Game::from_values(d, values)?,
        mean,
        variance,
    })
}
