use std::collections::BTreeMap;

use super::coalition::{full_mask, Coalition};
use super::Game;
use crate::error::{Error, Result};
use crate::scalar::{binomial, is_negative, Scalar};

/// Largest `d` for which the `d!` permutation traversal is attempted.
pub const MAX_PERMUTATION_DIM: usize = 8;

fn check_index(d: usize, i: usize) -> Result<()> {
    if i == 0 || i > d {
        Err(Error::IndexOutOfRange { index: i, d })
    } else {
        Ok(())
    }
}

/// Combines per-cardinality sums `sums[k]` with the weights `C(n, k)^{-1}` and the
/// outer factor `1/(n+1)`.
fn weighted_average<T: Scalar>(sums: Vec<T>, n: usize) -> T {
    let mut acc = T::zero();
    for (k, s) in sums.into_iter().enumerate() {
        if !s.is_zero() {
            acc = acc + s * T::ratio(1, binomial(n as u64, k as u64));
        }
    }
    acc * T::ratio(1, n as u64 + 1)
}

/// Shapley value of player `i` (1-based): the average of the marginal contributions
/// `val(v + i) − val(v)` over `v ⊆ [1,d] \ {i}`, weighted by `C(d−1, |v|)^{-1} / d`.
pub fn shapley<T: Scalar>(game: &Game<T>, i: usize) -> Result<T> {
    let d = game.dim();
    check_index(d, i)?;
    let ibit = 1u32 << (i - 1);
    let rest = Coalition::from_bits(d, full_mask(d) & !ibit)?;
    let mut sums = vec![T::zero(); d];
    for v in rest.subsets() {
        let b = v.bits();
        let k = v.len();
        sums[k] = sums[k].clone() + game.value_bits(b | ibit).clone() - game.value_bits(b).clone();
    }
    Ok(weighted_average(sums, d - 1))
}

pub fn shapley_all<T: Scalar>(game: &Game<T>) -> Vec<T> {
    (1..=game.dim())
        .map(|i| shapley(game, i).expect("index in range"))
        .collect()
}

/// Shapley value via the permutation characterization: the mean over all `d!` orderings
/// of the marginal contribution of `i` against the players preceding it.
pub fn shapley_permutation<T: Scalar>(game: &Game<T>, i: usize) -> Result<T> {
    let d = game.dim();
    check_index(d, i)?;
    if d > MAX_PERMUTATION_DIM {
        return Err(Error::TooManyPermutations {
            d,
            max: MAX_PERMUTATION_DIM,
        });
    }
    let target = (i - 1) as u8;
    let mut perm: Vec<u8> = (0..d as u8).collect();
    let mut total = T::zero();
    let mut count: u64 = 0;
    let mut visit = |p: &[u8]| {
        let mut prefix = 0u32;
        for &player in p {
            if player == target {
                break;
            }
            prefix |= 1 << player;
        }
        total = total.clone() + game.value_bits(prefix | (1 << target)).clone()
            - game.value_bits(prefix).clone();
        count += 1;
    };
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; d];
    visit(&perm);
    let mut k = 1;
    while k < d {
        if c[k] < k {
            if k % 2 == 0 {
                perm.swap(0, k);
            } else {
                perm.swap(c[k], k);
            }
            visit(&perm);
            c[k] += 1;
            k = 1;
        } else {
            c[k] = 0;
            k += 1;
        }
    }
    Ok(total * T::ratio(1, count))
}

/// Shapley-Owen interaction index of the subset `u`:
/// `1/(d−|u|+1) Σ_{v ⊆ ū} C(d−|u|, |v|)^{-1} Σ_{w ⊆ u} (−1)^{|u|−|w|} val(v + w)`.
pub fn shapley_owen<T: Scalar>(game: &Game<T>, u: Coalition) -> Result<T> {
    if u.dim() != game.dim() {
        return Err(Error::DimensionMismatch {
            expected: game.dim(),
            found: u.dim(),
        });
    }
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    let n = game.dim() - u.len();
    let ulen = u.len();
    let mut sums = vec![T::zero(); n + 1];
    for v in u.complement().subsets() {
        let mut inner = T::zero();
        for w in u.subsets() {
            let val = game.value_bits(v.bits() | w.bits()).clone();
            if (ulen - w.len()).is_multiple_of(2) {
                inner = inner + val;
            } else {
                inner = inner - val;
            }
        }
        let k = v.len();
        sums[k] = sums[k].clone() + inner;
    }
    Ok(weighted_average(sums, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InteractionKind {
    Synergistic,
    Antagonistic,
    Neutral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interaction<T> {
    pub value: T,
    pub kind: InteractionKind,
}

/// Two-factor interaction of `i` and `j`: the averaged second difference
/// `val(v+{i,j}) − val(v+i) − val(v+j) + val(v)` over `v ⊆ [1,d] \ {i,j}`.
pub fn two_factor_interaction<T: Scalar>(game: &Game<T>, i: usize, j: usize) -> Result<Interaction<T>> {
    let d = game.dim();
    check_index(d, i)?;
    check_index(d, j)?;
    if i == j {
        return Err(Error::RepeatedIndex(i));
    }
    let ib = 1u32 << (i - 1);
    let jb = 1u32 << (j - 1);
    let rest = Coalition::from_bits(d, full_mask(d) & !(ib | jb))?;
    let mut sums = vec![T::zero(); d - 1];
    for v in rest.subsets() {
        let b = v.bits();
        let diff = game.value_bits(b | ib | jb).clone() - game.value_bits(b | ib).clone()
            - game.value_bits(b | jb).clone()
            + game.value_bits(b).clone();
        let k = v.len();
        sums[k] = sums[k].clone() + diff;
    }
    let value = weighted_average(sums, d - 2);
    let kind = if value > T::zero() {
        InteractionKind::Synergistic
    } else if value < T::zero() {
        InteractionKind::Antagonistic
    } else {
        InteractionKind::Neutral
    };
    Ok(Interaction { value, kind })
}

/// Harsanyi dividends `c_v` of a game: `val(u) = Σ_{∅≠v⊆u} c_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dividends<T> {
    d: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Dividends<T> {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, v: Coalition) -> &T {
        &self.coeffs[v.bits() as usize]
    }

    /// Nonzero dividends in increasing bitmask order.
    pub fn iter(&self) -> impl Iterator<Item = (Coalition, &T)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(b, c)| (Coalition::from_bits(self.d, b as u32).expect("in range"), c))
    }

    pub fn to_map(&self) -> BTreeMap<Coalition, T> {
        self.iter().map(|(c, v)| (c, v.clone())).collect()
    }

    /// Rebuilds the game `val(u) = Σ_{v⊆u} c_v` (zeta transform).
    pub fn reconstruct(&self) -> Result<Game<T>> {
        let mut values = self.coeffs.clone();
        for bit in 0..self.d {
            let b = 1usize << bit;
            for mask in 0..values.len() {
                if mask & b != 0 {
                    values[mask] = values[mask].clone() + values[mask ^ b].clone();
                }
            }
        }
        Game::from_values(self.d, values)
    }
}

/// Möbius inversion of the game into unanimity-game coefficients.
pub fn unanimity_decompose<T: Scalar>(game: &Game<T>) -> Dividends<T> {
    let d = game.dim();
    let mut coeffs = game.values().to_vec();
    for bit in 0..d {
        let b = 1usize << bit;
        for mask in 0..coeffs.len() {
            if mask & b != 0 {
                coeffs[mask] = coeffs[mask].clone() - coeffs[mask ^ b].clone();
            }
        }
    }
    Dividends { d, coeffs }
}

/// Shapley value from dividends: every dividend is split equally among its members.
pub fn shapley_from_dividends<T: Scalar>(dividends: &Dividends<T>, i: usize) -> Result<T> {
    check_index(dividends.d, i)?;
    let mut acc = T::zero();
    for (v, c) in dividends.iter() {
        if v.contains(i) {
            acc = acc + c.clone() * T::ratio(1, v.len() as u64);
        }
    }
    Ok(acc)
}

fn check_variances<T: Scalar>(sigma2: &BTreeMap<Coalition, T>, u: Coalition) -> Result<()> {
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    for (v, s) in sigma2 {
        if v.dim() != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                found: v.dim(),
            });
        }
        if is_negative(s) {
            return Err(Error::NegativeVariance {
                subset: v.to_string(),
                value: s.to_f64(),
            });
        }
    }
    Ok(())
}

/// Shapley-Owen effect from partial variances (independent inputs):
/// `Σ_{v ⊇ u} σ²_v / (|v| − |u| + 1)`.
pub fn mobius_shapley_owen<T: Scalar>(sigma2: &BTreeMap<Coalition, T>, u: Coalition) -> Result<T> {
    check_variances(sigma2, u)?;
    let mut acc = T::zero();
    for (v, s) in sigma2 {
        if u.is_subset_of(*v) {
            acc = acc + s.clone() * T::ratio(1, (v.len() - u.len() + 1) as u64);
        }
    }
    Ok(acc)
}

/// Lower and upper brackets for a Shapley-Owen effect under independence.
#[derive(Clone, Debug, PartialEq)]
pub struct Brackets<T> {
    /// σ²_u
    pub lower: T,
    /// Superset importance γ_u = Σ_{v ⊇ u} σ²_v.
    pub upper: T,
    /// min(½(S_u + γ_u), γ_u) with S_u = Σ_{v ⊆ u} σ²_v.
    pub sharpened_upper: T,
}

pub fn shapley_owen_brackets<T: Scalar>(sigma2: &BTreeMap<Coalition, T>, u: Coalition) -> Result<Brackets<T>> {
    check_variances(sigma2, u)?;
    let lower = sigma2.get(&u).cloned().unwrap_or_else(T::zero);
    let mut upper = T::zero();
    let mut closed = T::zero();
    for (v, s) in sigma2 {
        if u.is_subset_of(*v) {
            upper = upper + s.clone();
        }
        if v.is_subset_of(u) && !v.is_empty() {
            closed = closed + s.clone();
        }
    }
    let half = (closed + upper.clone()) * T::ratio(1, 2);
    // For |u| ≥ 2 the lower-order terms in S_u can push the midpoint above γ_u.
    let sharpened_upper = if half < upper { half } else { upper.clone() };
    Ok(Brackets {
        lower,
        upper,
        sharpened_upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use num_bigint::BigInt;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    fn propositional() -> Game<Rational> {
        Game::from_cardinality_listing(
            3,
            vec![q(0, 1), q(0, 1), q(1, 16), q(1, 16), q(1, 8), q(1, 8), q(1, 8), q(1, 4)],
        )
        .unwrap()
    }

    fn three_player_game() -> Game<Rational> {
        Game::from_cardinality_listing(3, [0, 0, 2, 0, 5, 6, 7, 10].iter().map(|&v| q(v, 1)).collect())
            .unwrap()
    }

    fn c(d: usize, ix: &[usize]) -> Coalition {
        Coalition::from_indices(d, ix).unwrap()
    }

    #[test]
    fn propositional_game_shapley() {
        // The printed 1/32 for player 1 does not satisfy efficiency; the sum
        // 1/3·(0 + ½·1/16 + ½·1/16 + 1/8) is 1/16.
        let g = propositional();
        assert_eq!(shapley(&g, 1).unwrap(), q(1, 16));
        assert_eq!(shapley(&g, 2).unwrap(), q(3, 32));
        assert_eq!(shapley(&g, 3).unwrap(), q(3, 32));
        assert_eq!(shapley_permutation(&g, 1).unwrap(), q(1, 16));
    }

    #[test]
    fn three_player_game_all_paths() {
        let g = three_player_game();
        let expected = [q(5, 2), q(4, 1), q(7, 2)];
        let div = unanimity_decompose(&g);
        for i in 1..=3 {
            assert_eq!(shapley(&g, i).unwrap(), expected[i - 1]);
            assert_eq!(shapley_permutation(&g, i).unwrap(), expected[i - 1]);
            assert_eq!(shapley_from_dividends(&div, i).unwrap(), expected[i - 1]);
        }
        let map = div.to_map();
        assert_eq!(map.len(), 5);
        assert_eq!(map[&c(3, &[2])], q(2, 1));
        assert_eq!(map[&c(3, &[1, 2])], q(3, 1));
        assert_eq!(map[&c(3, &[1, 3])], q(6, 1));
        assert_eq!(map[&c(3, &[2, 3])], q(5, 1));
        assert_eq!(map[&c(3, &[1, 2, 3])], q(-6, 1));
        assert_eq!(div.reconstruct().unwrap(), g);
    }

    #[test]
    fn pair_effects_of_propositional_game() {
        let g = propositional();
        assert_eq!(shapley_owen(&g, c(3, &[1, 2])).unwrap(), q(1, 16));
        assert_eq!(shapley_owen(&g, c(3, &[1, 3])).unwrap(), q(1, 16));
        assert_eq!(shapley_owen(&g, c(3, &[2, 3])).unwrap(), q(0, 1));
        assert_eq!(shapley_owen(&g, c(3, &[2])).unwrap(), q(3, 32));
        let t = two_factor_interaction(&g, 2, 3).unwrap();
        assert_eq!(t.value, q(0, 1));
        assert_eq!(t.kind, InteractionKind::Neutral);
        let t = two_factor_interaction(&g, 1, 2).unwrap();
        assert_eq!(t.value, q(1, 16));
        assert_eq!(t.kind, InteractionKind::Synergistic);
    }

    #[test]
    fn antagonistic_label() {
        // val({1,2}) below the sum of singletons.
        let g = Game::from_cardinality_listing(2, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let t = two_factor_interaction(&g, 1, 2).unwrap();
        assert_eq!(t.value, -1.0);
        assert_eq!(t.kind, InteractionKind::Antagonistic);
    }

    #[test]
    fn dummy_player_gets_zero() {
        // Player 3 never changes the value.
        let g = Game::from_fn(3, |c| q((c.bits() & 0b011) as i64, 1)).unwrap();
        assert_eq!(shapley(&g, 3).unwrap(), q(0, 1));
    }

    #[test]
    fn single_player_permutation() {
        let g = Game::from_values(1, vec![q(0, 1), q(7, 3)]).unwrap();
        assert_eq!(shapley_permutation(&g, 1).unwrap(), q(7, 3));
    }

    #[test]
    fn additive_game_has_no_interactions() {
        let w = [3i64, -1, 4, 2];
        let g = Game::from_fn(4, |c| q(c.indices().iter().map(|&i| w[i - 1]).sum(), 1)).unwrap();
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                assert_eq!(two_factor_interaction(&g, i, j).unwrap().value, q(0, 1));
            }
        }
    }

    #[test]
    fn unanimity_dividends_and_shapley() {
        let s = c(4, &[1, 3, 4]);
        let g = Game::from_fn(4, |u| if s.is_subset_of(u) { q(1, 1) } else { q(0, 1) }).unwrap();
        let div = unanimity_decompose(&g);
        let map = div.to_map();
        assert_eq!(map.len(), 1);
        assert_eq!(map[&s], q(1, 1));
        for i in 1..=4 {
            let expected = if s.contains(i) { q(1, 3) } else { q(0, 1) };
            assert_eq!(shapley_from_dividends(&div, i).unwrap(), expected);
        }
    }

    #[test]
    fn unanimity_shapley_owen_brute_force() {
        for d in 1..=6 {
            let full = Coalition::full(d).unwrap();
            for s in full.subsets().filter(|s| !s.is_empty()) {
                let g = Game::from_fn(d, |v| if s.is_subset_of(v) { q(1, 1) } else { q(0, 1) }).unwrap();
                for u in s.subsets().filter(|u| !u.is_empty()) {
                    let expected = q(1, (s.len() - u.len() + 1) as i64);
                    assert_eq!(shapley_owen(&g, u).unwrap(), expected, "d={d} s={s} u={u}");
                }
            }
        }
    }

    #[test]
    fn mobius_and_brackets_examples() {
        let mut sigma2 = BTreeMap::new();
        sigma2.insert(c(2, &[1]), q(1, 3));
        sigma2.insert(c(2, &[1, 2]), q(1, 9));
        let u = c(2, &[1]);
        assert_eq!(mobius_shapley_owen(&sigma2, u).unwrap(), q(7, 18));
        let b = shapley_owen_brackets(&sigma2, u).unwrap();
        assert_eq!(b.lower, q(1, 3));
        assert_eq!(b.upper, q(4, 9));
        assert_eq!(b.sharpened_upper, q(7, 18));

        let mut single = BTreeMap::new();
        let s = c(3, &[2, 3]);
        single.insert(s, q(2, 5));
        let b = shapley_owen_brackets(&single, s).unwrap();
        assert_eq!((b.lower.clone(), b.upper.clone()), (q(2, 5), q(2, 5)));
        assert_eq!(b.sharpened_upper, q(2, 5));
        assert_eq!(mobius_shapley_owen(&single, c(3, &[2])).unwrap(), q(1, 5));
    }

    #[test]
    fn mobius_rejects_negative_and_empty() {
        let mut sigma2 = BTreeMap::new();
        sigma2.insert(c(2, &[2]), -0.5);
        assert!(matches!(
            mobius_shapley_owen(&sigma2, c(2, &[2])),
            Err(Error::NegativeVariance { .. })
        ));
        let ok: BTreeMap<Coalition, f64> = BTreeMap::new();
        assert!(matches!(
            mobius_shapley_owen(&ok, Coalition::empty(2).unwrap()),
            Err(Error::EmptySubset)
        ));
    }

    #[test]
    fn error_paths() {
        let g = propositional();
        assert!(matches!(shapley(&g, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(shapley(&g, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(
            shapley_owen(&g, Coalition::empty(3).unwrap()),
            Err(Error::EmptySubset)
        ));
        assert!(matches!(
            two_factor_interaction(&g, 2, 2),
            Err(Error::RepeatedIndex(2))
        ));
        let big = Game::from_fn(9, |_| 0.0).unwrap();
        assert!(matches!(
            shapley_permutation(&big, 1),
            Err(Error::TooManyPermutations { d: 9, .. })
        ));
    }
}
