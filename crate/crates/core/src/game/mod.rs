//! Cooperative games over input subsets and their Shapley / Shapley-Owen attributions.
//!
//! A [`Game`] stores one value per coalition (all `2^d` of them, indexed by bitmask).
//! Every operation is generic over [`Scalar`], so exact rational games produce exact
//! rational attributions and floating games produce floating ones.

mod closed_form;
mod coalition;
mod shapley;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use closed_form::{
    closed_form_graph, closed_form_linear, closed_form_linear_gaussian, graph_game,
    linear_gaussian_game,
};
pub use coalition::{Coalition, Subsets, MAX_DIM};
pub use shapley::{
    mobius_shapley_owen, shapley, shapley_all, shapley_from_dividends, shapley_owen,
    shapley_owen_brackets, shapley_permutation, two_factor_interaction, unanimity_decompose,
    Brackets, Dividends, Interaction, InteractionKind, MAX_PERMUTATION_DIM,
};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, rational_from_f64_decimal, Rational, Scalar};

/// A total map from coalitions to values with `val(∅) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Game<T> {
    d: usize,
    values: Vec<T>,
}

impl<T: Scalar> Game<T> {
    /// Values indexed by coalition bitmask; `values.len()` must be `2^d` and `values[0]` zero.
    pub fn from_values(d: usize, values: Vec<T>) -> Result<Self> {
        coalition::check_dim(d)?;
        if values.len() != 1usize << d {
            return Err(Error::InvalidGame(format!(
                "expected {} values for d = {d}, got {}",
                1usize << d,
                values.len()
            )));
        }
        if !values[0].is_zero() {
            return Err(Error::NonzeroEmptyValue);
        }
        Ok(Self { d, values })
    }

    pub fn from_fn(d: usize, mut f: impl FnMut(Coalition) -> T) -> Result<Self> {
        let full = Coalition::full(d)?;
        let mut values = vec![T::zero(); 1usize << d];
        for c in full.subsets() {
            values[c.bits() as usize] = f(c);
        }
        Self::from_values(d, values)
    }

    /// Values listed in the order of [`Coalition::all_by_cardinality`]
    /// (∅, {1}, {2}, …, {1,2}, …), the layout used by printed game tables.
    pub fn from_cardinality_listing(d: usize, listing: Vec<T>) -> Result<Self> {
        let order = Coalition::all_by_cardinality(d)?;
        if listing.len() != order.len() {
            return Err(Error::InvalidGame(format!(
                "expected {} values, got {}",
                order.len(),
                listing.len()
            )));
        }
        let mut values = vec![T::zero(); order.len()];
        for (c, v) in order.into_iter().zip(listing) {
            values[c.bits() as usize] = v;
        }
        Self::from_values(d, values)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn value(&self, c: Coalition) -> &T {
        &self.values[c.bits() as usize]
    }

    #[inline]
    pub(crate) fn value_bits(&self, bits: u32) -> &T {
        &self.values[bits as usize]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn full_value(&self) -> &T {
        self.values.last().expect("games have at least one value")
    }

    /// Pointwise sum `(g1 + g2)(u)`.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Self::from_values(self.d, values)
    }

    /// The game restricted to the players in `keep`, re-indexed `1..=|keep|` in increasing order.
    pub fn subgame(&self, keep: Coalition) -> Result<Self> {
        let members = keep.indices();
        let k = members.len();
        Self::from_fn(k, |c| {
            let mut bits = 0u32;
            for j in c.indices() {
                bits |= 1 << (members[j - 1] - 1);
            }
            self.value_bits(bits).clone()
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Game<U> {
        Game {
            d: self.d,
            values: self.values.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Game<f64> {
        self.map(|v| v.to_f64())
    }
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    d: usize,
    values: BTreeMap<String, Value>,
}

impl Game<Rational> {
    /// Reads the JSON game format: `{ "d": 3, "values": { "": 0, "1": "1/16", … } }`.
    /// Values may be numbers or `"p/q"` strings; decimals are read exactly.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GameFile = serde_json::from_str(text)?;
        let d = file.d;
        coalition::check_dim(d)?;
        let mut values: Vec<Option<Rational>> = vec![None; 1usize << d];
        for (key, raw) in &file.values {
            let c = Coalition::parse(d, key)?;
            let v = match raw {
                Value::String(s) => parse_rational(s)?,
                Value::Number(n) => rational_from_f64_decimal(
                    n.as_f64()
                        .ok_or_else(|| Error::InvalidGame(format!("bad value for '{key}'")))?,
                )?,
                other => {
                    return Err(Error::InvalidGame(format!(
                        "value for '{key}' must be a number or \"p/q\", got {other}"
                    )))
                }
            };
            let slot = &mut values[c.bits() as usize];
            if slot.is_some() {
                return Err(Error::InvalidGame(format!("coalition {c} listed twice")));
            }
            *slot = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(bits, v)| {
                v.ok_or_else(|| {
                    let c = Coalition::from_bits(d, bits as u32).expect("in range");
                    Error::InvalidGame(format!("missing value for coalition {c}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_values(d, values)
    }

    /// Writes the JSON game format with exact `"p/q"` values and sorted keys.
    pub fn to_json(&self) -> String {
        let full = Coalition::full(self.d).expect("valid dimension");
        let values = full
            .subsets()
            .map(|c| (c.key(), Value::String(format_rational(self.value(c)))))
            .collect();
        let file = GameFile { d: self.d, values };
        serde_json::to_string_pretty(&file).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    pub(crate) fn q(n: i64, d: i64) -> Rational {
        Rational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn listing_order_places_values() {
        let g = Game::from_cardinality_listing(
            3,
            vec![0, 0, 2, 0, 5, 6, 7, 10].into_iter().map(|v| v as f64).collect(),
        )
        .unwrap();
        let c = |ix: &[usize]| Coalition::from_indices(3, ix).unwrap();
        assert_eq!(*g.value(c(&[2])), 2.0);
        assert_eq!(*g.value(c(&[1, 3])), 6.0);
        assert_eq!(*g.value(c(&[2, 3])), 7.0);
        assert_eq!(*g.full_value(), 10.0);
    }

    #[test]
    fn rejects_nonzero_empty_value() {
        assert!(matches!(
            Game::from_values(1, vec![1.0, 2.0]),
            Err(Error::NonzeroEmptyValue)
        ));
        assert!(Game::<f64>::from_values(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = Game::from_cardinality_listing(
            3,
            vec![
                q(0, 1),
                q(0, 1),
                q(1, 16),
                q(1, 16),
                q(1, 8),
                q(1, 8),
                q(1, 8),
                q(1, 4),
            ],
        )
        .unwrap();
        let text = g.to_json();
        assert!(text.contains("\"1,2\": \"1/8\""));
        assert_eq!(Game::from_json(&text).unwrap(), g);
    }

    #[test]
    fn json_accepts_numbers_and_rejects_gaps() {
        let text = r#"{"d":1,"values":{"":0,"1":0.25}}"#;
        let g = Game::from_json(text).unwrap();
        assert_eq!(*g.full_value(), q(1, 4));
        let missing = r#"{"d":2,"values":{"":0,"1":1,"2":1}}"#;
        assert!(matches!(Game::from_json(missing), Err(Error::InvalidGame(_))));
        let nonzero = r#"{"d":1,"values":{"":"1/2","1":1}}"#;
        assert!(matches!(
            Game::from_json(nonzero),
            Err(Error::NonzeroEmptyValue)
        ));
    }

    #[test]
    fn subgame_reindexes() {
        let g = Game::from_fn(3, |c| c.bits() as f64).unwrap();
        let keep = Coalition::from_indices(3, &[1, 3]).unwrap();
        let s = g.subgame(keep).unwrap();
        assert_eq!(s.dim(), 2);
        // {2} in the subgame is original player 3 (bit 0b100).
        assert_eq!(*s.value(Coalition::from_indices(2, &[2]).unwrap()), 4.0);
        assert_eq!(*s.full_value(), 5.0);
    }
}
