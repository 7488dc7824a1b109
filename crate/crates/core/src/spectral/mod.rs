//! Shapley-Owen effects read off a polynomial chaos expansion through elementary games.
//!
//! A retained coefficient `y_α` contributes `y_α² · Sh_u(val^α)` where
//! `val^α(w) = [support(α) ⊆ w]`, so once those elementary values are tabulated the
//! effect of any subset is a weighted sum of squared coefficients.

mod table;

use std::collections::BTreeMap;

use serde::Serialize;

pub use table::{entry_count, ElementaryTable, FORMAT_VERSION, MAX_ENTRIES};

use crate::basis::MultiIndex;
use crate::error::{Error, Result};
use crate::game::{shapley_owen, shapley_owen_brackets, Brackets, Coalition, Game};
use crate::pce::{build_sparse, Pce, SparseConfig};
use crate::scalar::{binomial, rational_to_f64, Rational};
use crate::transform::DistributionSpec;

/// `val^α(w) = 1` when every input active in `α` lies in `w`.
pub fn elementary_value(alpha: &MultiIndex, w: Coalition) -> Result<u8> {
    if alpha.is_zero() {
        return Err(Error::InvalidConfig(
            "the zero multi-index has no elementary game".into(),
        ));
    }
    if alpha.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: alpha.dim(),
            found: w.dim(),
        });
    }
    Ok(u8::from(alpha.support().is_subset_of(w)))
}

/// The unanimity-style game `w ↦ [s ⊆ w]` on `d` players.
pub fn elementary_game(s: Coalition, d: usize) -> Result<Game<Rational>> {
    if s.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.dim(),
        });
    }
    if s.is_empty() {
        return Err(Error::EmptySubset);
    }
    let one = Rational::from_integer(1.into());
    let zero = Rational::from_integer(0.into());
    Game::from_fn(d, |w| if s.is_subset_of(w) { one.clone() } else { zero.clone() })
}

/// `Sh_u(val^α)` for `support(α) = s`, by brute force over the elementary game.
pub fn elementary_shapley_owen(s: Coalition, u: Coalition, d: usize) -> Result<Rational> {
    shapley_owen(&elementary_game(s, d)?, u)
}

/// `κ_u = 2^{|u|−1}/(d−|u|+1) · Σ_{v⊆ū} C(d−|u|, |v|)⁻¹`, the factor converting a
/// per-coalition truncation error into a bound on the Shapley-Owen effect.
pub fn kappa(u: Coalition) -> Result<Rational> {
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = (u.dim() - u.len()) as u64;
    // subsets of ū grouped by size
    let sum: Rational = (0..=n)
        .map(|k| {
            let c = binomial(n, k);
            Rational::new(c.into(), 1.into()) / Rational::from_integer(c.into())
        })
        .sum();
    let pow = Rational::from_integer((1u64 << (u.len() - 1)).into());
    Ok(pow / Rational::from_integer((n + 1).into()) * sum)
}

pub fn kappa_f64(u: Coalition) -> Result<f64> {
    Ok(rational_to_f64(&kappa(u)?))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    /// Target subset in input coordinates.
    pub subset: Coalition,
    pub estimate: f64,
    /// `κ_u · ε_l`.
    pub error_bound: f64,
    pub kappa: f64,
    pub epsilon_l: f64,
}

/// Maps a subset of inputs to the image-space positions the expansion is indexed by.
pub fn to_image(u: Coalition, ordering: &[usize]) -> Result<Coalition> {
    let positions: Vec<usize> = ordering
        .iter()
        .enumerate()
        .filter(|(_, &input)| u.contains(input))
        .map(|(k, _)| k + 1)
        .collect();
    Coalition::from_indices(u.dim(), &positions)
}

fn check_dims(pce: &Pce, u: Coalition, table: &ElementaryTable) -> Result<()> {
    for found in [u.dim(), table.dim()] {
        if found != pce.dim() {
            return Err(Error::DimensionMismatch {
                expected: pce.dim(),
                found,
            });
        }
    }
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(())
}

/// `Σ_{α≠0} y_α² Sh_u(val^α)` with its truncation bound. `u` is given in input
/// coordinates and mapped through the expansion's variable ordering.
pub fn spectral_shapley_owen(pce: &Pce, u: Coalition, table: &ElementaryTable) -> Result<SpectralResult> {
    check_dims(pce, u, table)?;
    let image = to_image(u, &pce.distribution().ordering())?;
    let mut by_support: BTreeMap<Coalition, f64> = BTreeMap::new();
    for (a, y) in pce.coefficients().iter().filter(|(a, _)| !a.is_zero()) {
        *by_support.entry(a.support()).or_insert(0.0) += y * y;
    }
    let mut estimate = 0.0;
    for (s, mass) in by_support {
        let v = table.get(s, image)?;
        if *v.numer() != 0.into() {
            estimate += mass * rational_to_f64(v);
        }
    }
    let k = kappa_f64(u)?;
    let eps = pce.epsilon_l();
    Ok(SpectralResult {
        subset: u,
        estimate,
        error_bound: k * eps,
        kappa: k,
        epsilon_l: eps,
    })
}

/// Monotone brackets on `Sh_u` built from the expansion's partial variances
/// (input coordinates).
pub fn pce_brackets(pce: &Pce, u: Coalition) -> Result<Brackets<f64>> {
    let ordering = pce.distribution().ordering();
    let image = to_image(u, &ordering)?;
    let mut sigma2 = pce.partial_variances();
    if ordering.iter().enumerate().any(|(k, &i)| k + 1 != i) {
        // back to input coordinates
        sigma2 = sigma2
            .into_iter()
            .map(|(s, v)| {
                let inputs: Vec<usize> = s.indices().into_iter().map(|p| ordering[p - 1]).collect();
                Ok((Coalition::from_indices(s.dim(), &inputs)?, v))
            })
            .collect::<Result<_>>()?;
        return shapley_owen_brackets(&sigma2, u);
    }
    shapley_owen_brackets(&sigma2, image)
}

/// Which construction produced an end-to-end result.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "route", rename_all = "snake_case")]
pub enum Route {
    /// One expansion; effects read from the elementary table.
    SingleExpansion,
    /// Inputs are dependent: one expansion per variable ordering, chosen so every coalition
    /// is a prefix of some ordering; the game is assembled from prefix variances.
    ChainCover { orderings: Vec<Vec<usize>> },
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub route: Route,
    pub results: Vec<SpectralResult>,
    pub expansions: Vec<Pce>,
    /// The assembled variance game (chain-cover route only).
    pub game: Option<Game<f64>>,
}

/// Orderings whose prefixes cover every coalition of `d` inputs, one per chain of the
/// symmetric chain decomposition of the subset lattice (`C(d, ⌊d/2⌋)` orderings).
///
/// Reading a subset as a word with `0 = (` and `1 = )`, the unmatched positions of a
/// chain's smallest member are all `0`; the chain climbs by setting them left to right.
/// Each chain is padded into a full ordering: the member's own inputs first, then the
/// chain's steps, then the matched zeros.
pub fn chain_cover(d: usize) -> Result<Vec<Vec<usize>>> {
    Coalition::full(d)?;
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << d) {
        let mut open: Vec<usize> = Vec::new();
        let mut matched_zero = Vec::new();
        let mut unmatched_one = false;
        for i in 1..=d {
            if mask >> (i - 1) & 1 == 0 {
                open.push(i);
            } else if let Some(z) = open.pop() {
                matched_zero.push(z);
            } else {
                unmatched_one = true;
            }
        }
        if unmatched_one {
            continue;
        }
        let mut order: Vec<usize> = (1..=d).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        order.extend(&open);
        matched_zero.sort_unstable();
        order.extend(matched_zero);
        out.push(order);
    }
    Ok(out)
}

/// Builds expansion(s) for `model` under `dist` and returns the Shapley-Owen effect of each
/// subset in `subsets`. Independent inputs use a single expansion and the table (extended
/// on demand); dependent inputs use the chain-cover route.
pub fn analyze<F>(
    model: &F,
    dist: &DistributionSpec,
    cfg: &SparseConfig,
    subsets: &[Coalition],
    table: &mut ElementaryTable,
) -> Result<Analysis>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let d = dist.dim();
    if !dist.is_continuous() {
        return Err(Error::DiscreteUnsupported);
    }
    if table.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: table.dim(),
        });
    }
    for u in subsets {
        if u.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.dim(),
            });
        }
        if u.is_empty() {
            return Err(Error::EmptySubset);
        }
    }
    if dist.is_independent() {
        let pce = build_sparse(model, dist, cfg)?;
        table.extend(pce.coefficients().keys().map(MultiIndex::support))?;
        let results = subsets
            .iter()
            .map(|&u| spectral_shapley_owen(&pce, u, table))
            .collect::<Result<_>>()?;
        return Ok(Analysis {
            route: Route::SingleExpansion,
            results,
            expansions: vec![pce],
            game: None,
        });
    }

    let orderings = chain_cover(d)?;
    let mut values: Vec<Option<f64>> = vec![None; 1usize << d];
    values[0] = Some(0.0);
    let mut expansions = Vec::with_capacity(orderings.len());
    for order in &orderings {
        let pce = build_sparse(model, &dist.clone().with_ordering(order.clone())?, cfg)?;
        // prefix variances: val(first k inputs) = Σ over supports within the first k positions
        let mut by_reach = vec![0.0; d + 1];
        for (a, y) in pce.coefficients().iter().filter(|(a, _)| !a.is_zero()) {
            let reach = a.support().indices().last().copied().unwrap_or(0);
            by_reach[reach] += y * y;
        }
        let mut prefix = Coalition::empty(d)?;
        let mut acc = 0.0;
        for (k, &input) in order.iter().enumerate() {
            prefix = prefix.with(input);
            acc += by_reach[k + 1];
            let slot = &mut values[prefix.bits() as usize];
            if slot.is_none() {
                *slot = Some(acc);
            }
        }
        expansions.push(pce);
    }
    let game = Game::from_values(
        d,
        values
            .into_iter()
            .map(|v| v.expect("chain cover reaches every coalition"))
            .collect(),
    )?;
    let eps = expansions.iter().map(Pce::epsilon_l).fold(0.0, f64::max);
    let results = subsets
        .iter()
        .map(|&u| {
            let k = kappa_f64(u)?;
            Ok(SpectralResult {
                subset: u,
                estimate: shapley_owen(&game, u)?,
                error_bound: k * eps,
                kappa: k,
                epsilon_l: eps,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Analysis {
        route: Route::ChainCover { orderings },
        results,
        expansions,
        game: Some(game),
    })
}

/// Single-subset convenience over [`analyze`] with a freshly computed table.
pub fn end_to_end<F>(model: &F, dist: &DistributionSpec, cfg: &SparseConfig, u: Coalition) -> Result<SpectralResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync + ?Sized,
{
    let d = dist.dim();
    let mut table = ElementaryTable::precompute(d, d.min(6))?;
    let mut a = analyze(model, dist, cfg, &[u], &mut table)?;
    Ok(a.results.remove(0))
}
