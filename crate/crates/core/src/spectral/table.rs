//! Precomputed elementary Shapley-Owen values keyed by (support, target).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::elementary_shapley_owen;
use crate::error::{Error, Result};
use crate::game::{Coalition, MAX_DIM};
use crate::scalar::{binomial, format_rational, parse_rational, Rational};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"SOAT";
/// Largest number of stored entries.
pub const MAX_ENTRIES: u64 = 5_000_000;
/// Dimension up to which entries are brute-forced over all `d` players; above it,
/// over the support only (players outside the support are null players).
const FULL_BRUTE_FORCE_DIM: usize = 12;

/// `Sh_u(val^α)` for every support `s` with `|s| ≤ max_order` (plus any supports appended
/// on demand) and every target `u`. Only entries with `u ⊆ s` are stored; the rest are 0.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryTable {
    d: usize,
    max_order: usize,
    /// Supports beyond `max_order` that were appended later.
    extra: BTreeSet<Coalition>,
    entries: BTreeMap<(Coalition, Coalition), Rational>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFile {
    format_version: u32,
    d: usize,
    max_order: usize,
    extra_supports: Vec<String>,
    entries: Vec<TableEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    s: String,
    u: String,
    value: String,
}

/// Number of stored entries for `(d, max_order)`: `Σ_{k≤max_order} C(d,k)(2^k − 1)`.
pub fn entry_count(d: usize, max_order: usize) -> u64 {
    (1..=max_order.min(d))
        .map(|k| binomial(d as u64, k as u64).saturating_mul((1u64 << k) - 1))
        .fold(0u64, u64::saturating_add)
}

impl ElementaryTable {
    pub fn precompute(d: usize, max_order: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::DimensionTooLarge { d, max: MAX_DIM });
        }
        if max_order == 0 || max_order > d {
            return Err(Error::InvalidConfig(format!(
                "max_order must lie in 1..={d}, got {max_order}"
            )));
        }
        let entries = entry_count(d, max_order);
        if entries > MAX_ENTRIES {
            return Err(Error::TableTooLarge {
                entries,
                limit: MAX_ENTRIES,
            });
        }
        let values = size_values(d, max_order)?;
        let full = Coalition::full(d)?;
        let supports: Vec<Coalition> = full
            .subsets()
            .filter(|s| !s.is_empty() && s.len() <= max_order)
            .collect();
        let entries = supports
            .par_iter()
            .flat_map_iter(|&s| {
                let values = &values;
                s.subsets()
                    .filter(|u| !u.is_empty())
                    .map(move |u| ((s, u), values[&(s.len(), u.len())].clone()))
            })
            .collect();
        Ok(Self {
            d,
            max_order,
            extra: BTreeSet::new(),
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn covers(&self, s: Coalition) -> bool {
        !s.is_empty() && (s.len() <= self.max_order || self.extra.contains(&s))
    }

    /// `Sh_u(val^α)` for `support(α) = s`.
    pub fn get(&self, s: Coalition, u: Coalition) -> Result<&Rational> {
        static ZERO: std::sync::OnceLock<Rational> = std::sync::OnceLock::new();
        if s.dim() != self.d || u.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: if s.dim() != self.d { s.dim() } else { u.dim() },
            });
        }
        if u.is_empty() {
            return Err(Error::EmptySubset);
        }
        if !self.covers(s) {
            return Err(Error::MissingSupport(s.to_string()));
        }
        Ok(self
            .entries
            .get(&(s, u))
            .unwrap_or_else(|| ZERO.get_or_init(|| Rational::from_integer(0.into()))))
    }

    /// Appends entries for supports not yet covered; returns how many supports were added.
    pub fn extend(&mut self, supports: impl IntoIterator<Item = Coalition>) -> Result<usize> {
        let mut added = 0;
        let mut by_size: HashMap<(usize, usize), Rational> = HashMap::new();
        for s in supports {
            if s.dim() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: s.dim(),
                });
            }
            if s.is_empty() || self.covers(s) {
                continue;
            }
            let new = (1u64 << s.len()) - 1;
            if self.entries.len() as u64 + new > MAX_ENTRIES {
                return Err(Error::TableTooLarge {
                    entries: self.entries.len() as u64 + new,
                    limit: MAX_ENTRIES,
                });
            }
            for u in s.subsets().filter(|u| !u.is_empty()) {
                let key = (s.len(), u.len());
                if !by_size.contains_key(&key) {
                    by_size.insert(key, canonical_value(self.d, key.0, key.1)?);
                }
                self.entries.insert((s, u), by_size[&key].clone());
            }
            self.extra.insert(s);
            added += 1;
        }
        Ok(added)
    }

    pub fn to_json(&self) -> String {
        let file = TableFile {
            format_version: FORMAT_VERSION,
            d: self.d,
            max_order: self.max_order,
            extra_supports: self.extra.iter().map(|s| s.key()).collect(),
            entries: self
                .entries
                .iter()
                .map(|((s, u), v)| TableEntry {
                    s: s.key(),
                    u: u.key(),
                    value: format_rational(v),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("serializable");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: TableFile = serde_json::from_str(text)?;
        if f.format_version != FORMAT_VERSION {
            return Err(Error::TableFormat(format!(
                "unsupported format version {}",
                f.format_version
            )));
        }
        let mut t = Self::empty(f.d, f.max_order)?;
        for s in &f.extra_supports {
            t.extra.insert(Coalition::parse(f.d, s)?);
        }
        for e in f.entries {
            let s = Coalition::parse(f.d, &e.s)?;
            let u = Coalition::parse(f.d, &e.u)?;
            t.insert_loaded(s, u, parse_rational(&e.value)?)?;
        }
        t.check_complete()?;
        Ok(t)
    }

    /// Binary companion: magic, version, d, max_order, count, then per entry
    /// `(s_bits: u32, u_bits: u32, num: i64, den: i64)`, all little-endian.
    /// Appended supports are listed after the entries as `u32` bitmasks.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(28 + self.entries.len() * 24);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.extend_from_slice(&(self.max_order as u32).to_le_bytes());
        out.extend_from_slice(&(self.entries.len() as u64).to_le_bytes());
        for ((s, u), v) in &self.entries {
            let num = v.numer().to_i64();
            let den = v.denom().to_i64();
            let (Some(num), Some(den)) = (num, den) else {
                return Err(Error::TableFormat(format!("value {v} exceeds 64-bit storage")));
            };
            out.extend_from_slice(&s.bits().to_le_bytes());
            out.extend_from_slice(&u.bits().to_le_bytes());
            out.extend_from_slice(&num.to_le_bytes());
            out.extend_from_slice(&den.to_le_bytes());
        }
        out.extend_from_slice(&(self.extra.len() as u32).to_le_bytes());
        for s in &self.extra {
            out.extend_from_slice(&s.bits().to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::TableFormat("bad magic number".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::TableFormat(format!("unsupported format version {version}")));
        }
        let d = r.u32()? as usize;
        let max_order = r.u32()? as usize;
        let count = r.u64()?;
        let mut t = Self::empty(d, max_order)?;
        for _ in 0..count {
            let s = Coalition::from_bits(d, r.u32()?)?;
            let u = Coalition::from_bits(d, r.u32()?)?;
            let num = r.i64()?;
            let den = r.i64()?;
            if den <= 0 {
                return Err(Error::TableFormat("nonpositive denominator".into()));
            }
            t.insert_loaded(s, u, Rational::new(BigInt::from(num), BigInt::from(den)))?;
        }
        let extras = r.u32()?;
        for _ in 0..extras {
            t.extra.insert(Coalition::from_bits(d, r.u32()?)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::TableFormat("trailing bytes".into()));
        }
        t.check_complete()?;
        Ok(t)
    }

    fn empty(d: usize, max_order: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIM || max_order == 0 || max_order > d {
            return Err(Error::TableFormat(format!(
                "invalid header d = {d}, max_order = {max_order}"
            )));
        }
        Ok(Self {
            d,
            max_order,
            extra: BTreeSet::new(),
            entries: BTreeMap::new(),
        })
    }

    fn insert_loaded(&mut self, s: Coalition, u: Coalition, v: Rational) -> Result<()> {
        if u.is_empty() || !u.is_subset_of(s) {
            return Err(Error::TableFormat(format!("entry ({s}, {u}) has u ⊄ s")));
        }
        if self.entries.insert((s, u), v).is_some() {
            return Err(Error::TableFormat(format!("entry ({s}, {u}) listed twice")));
        }
        Ok(())
    }

    fn check_complete(&self) -> Result<()> {
        let expected = entry_count(self.d, self.max_order)
            + self.extra.iter().map(|s| (1u64 << s.len()) - 1).sum::<u64>();
        if self.entries.len() as u64 != expected {
            return Err(Error::TableFormat(format!(
                "expected {expected} entries, found {}",
                self.entries.len()
            )));
        }
        if let Some(((s, _), _)) = self.entries.iter().find(|((s, _), _)| !self.covers(*s)) {
            return Err(Error::TableFormat(format!("entry for uncovered support {s}")));
        }
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::TableFormat("truncated file".into()))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Brute-force value for a canonical support of size `ks` and target of size `ku ≤ ks`.
fn canonical_value(d: usize, ks: usize, ku: usize) -> Result<Rational> {
    let dim = if d <= FULL_BRUTE_FORCE_DIM { d } else { ks };
    let s = Coalition::from_indices(dim, &(1..=ks).collect::<Vec<_>>())?;
    let u = Coalition::from_indices(dim, &(1..=ku).collect::<Vec<_>>())?;
    elementary_shapley_owen(s, u, dim)
}

fn size_values(d: usize, max_order: usize) -> Result<HashMap<(usize, usize), Rational>> {
    let keys: Vec<(usize, usize)> = (1..=max_order)
        .flat_map(|ks| (1..=ks).map(move |ku| (ks, ku)))
        .collect();
    keys.par_iter()
        .map(|&(ks, ku)| Ok(((ks, ku), canonical_value(d, ks, ku)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn c(d: usize, ix: &[usize]) -> Coalition {
        Coalition::from_indices(d, ix).unwrap()
    }

    #[test]
    fn small_table() {
        let t = ElementaryTable::precompute(3, 3).unwrap();
        assert_eq!(t.len(), 19);
        assert_eq!(*t.get(c(3, &[1, 2, 3]), c(3, &[1])).unwrap(), q(1, 3));
        assert_eq!(*t.get(c(3, &[1, 2, 3]), c(3, &[1, 2])).unwrap(), q(1, 2));
        for i in 1..=3 {
            assert_eq!(*t.get(c(3, &[i]), c(3, &[i])).unwrap(), q(1, 1));
        }
        // every one of the 7×7 (support, target) pairs with u ⊄ s reads 0
        let all: Vec<Coalition> = Coalition::full(3).unwrap().subsets().skip(1).collect();
        for &s in &all {
            for &u in &all {
                if !u.is_subset_of(s) {
                    assert_eq!(*t.get(s, u).unwrap(), q(0, 1));
                }
            }
        }
    }

    #[test]
    fn coverage_and_extension() {
        let mut t = ElementaryTable::precompute(4, 2).unwrap();
        let s = c(4, &[1, 2, 4]);
        assert!(matches!(t.get(s, c(4, &[1])), Err(Error::MissingSupport(_))));
        assert_eq!(t.extend([s, c(4, &[1])]).unwrap(), 1);
        assert_eq!(*t.get(s, c(4, &[1, 4])).unwrap(), q(1, 2));
        let back = ElementaryTable::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let back = ElementaryTable::from_bytes(&t.to_bytes().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn persistence_is_exact() {
        let t = ElementaryTable::precompute(5, 4).unwrap();
        let json = t.to_json();
        assert_eq!(ElementaryTable::from_json(&json).unwrap(), t);
        assert_eq!(ElementaryTable::from_json(&json).unwrap().to_json(), json);
        let bytes = t.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"SOAT");
        assert_eq!(ElementaryTable::from_bytes(&bytes).unwrap(), t);
    }

    #[test]
    fn corrupt_files_rejected() {
        let t = ElementaryTable::precompute(3, 2).unwrap();
        let bytes = t.to_bytes().unwrap();
        assert!(ElementaryTable::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(ElementaryTable::from_bytes(&bad), Err(Error::TableFormat(_))));
        let json = t.to_json().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(ElementaryTable::from_json(&json), Err(Error::TableFormat(_))));
        let short = t.to_json().replacen("\"s\": \"1\",\n      \"u\": \"1\"", "\"s\": \"2\",\n      \"u\": \"1\"", 1);
        assert!(ElementaryTable::from_json(&short).is_err());
    }

    #[test]
    fn guards() {
        assert!(matches!(
            ElementaryTable::precompute(24, 6),
            Err(Error::TableTooLarge { .. })
        ));
        assert!(ElementaryTable::precompute(3, 4).is_err());
        assert!(ElementaryTable::precompute(3, 0).is_err());
        assert_eq!(entry_count(3, 3), 19);
        let big = ElementaryTable::precompute(16, 3).unwrap();
        assert_eq!(*big.get(c(16, &[2, 9, 16]), c(16, &[9])).unwrap(), q(1, 3));
    }
}
