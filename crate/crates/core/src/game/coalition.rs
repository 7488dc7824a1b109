use std::fmt;

use crate::error::{Error, Result};

/// Largest dimension for which exhaustive 2^d enumeration is allowed.
pub const MAX_DIM: usize = 24;

/// A subset of the input indices `1..=d`, stored as a bitmask (bit `i-1` for index `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition {
    bits: u32,
    d: u8,
}

impl Coalition {
    pub fn empty(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self { bits: 0, d: d as u8 })
    }

    pub fn full(d: usize) -> Result<Self> {
        check_dim(d)?;
        Ok(Self {
            bits: full_mask(d),
            d: d as u8,
        })
    }

    pub fn from_bits(d: usize, bits: u32) -> Result<Self> {
        check_dim(d)?;
        if bits & !full_mask(d) != 0 {
            return Err(Error::IndexOutOfRange {
                index: 32 - bits.leading_zeros() as usize,
                d,
            });
        }
        Ok(Self { bits, d: d as u8 })
    }

    /// Builds a coalition from 1-based indices; duplicates are rejected.
    pub fn from_indices(d: usize, indices: &[usize]) -> Result<Self> {
        check_dim(d)?;
        let mut bits = 0u32;
        for &i in indices {
            if i == 0 || i > d {
                return Err(Error::IndexOutOfRange { index: i, d });
            }
            let b = 1u32 << (i - 1);
            if bits & b != 0 {
                return Err(Error::RepeatedIndex(i));
            }
            bits |= b;
        }
        Ok(Self { bits, d: d as u8 })
    }

    pub fn singleton(d: usize, i: usize) -> Result<Self> {
        Self::from_indices(d, &[i])
    }

    /// Parses `"1,3"` (comma-separated, 1-based); the empty string is the empty coalition.
    pub fn parse(d: usize, text: &str) -> Result<Self> {
        let t = text.trim();
        if t.is_empty() {
            return Self::empty(d);
        }
        let indices = t
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidGame(format!("bad index '{s}' in '{text}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_indices(d, &indices)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn dim(self) -> usize {
        self.d as usize
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(self, i: usize) -> bool {
        i >= 1 && i <= self.dim() && self.bits & (1 << (i - 1)) != 0
    }

    /// `self + i`. Panics if `i` is out of range.
    pub fn with(self, i: usize) -> Self {
        assert!(i >= 1 && i <= self.dim(), "index {i} out of range");
        Self {
            bits: self.bits | (1 << (i - 1)),
            d: self.d,
        }
    }

    pub fn without(self, i: usize) -> Self {
        assert!(i >= 1 && i <= self.dim(), "index {i} out of range");
        Self {
            bits: self.bits & !(1 << (i - 1)),
            d: self.d,
        }
    }

    pub fn complement(self) -> Self {
        Self {
            bits: !self.bits & full_mask(self.dim()),
            d: self.d,
        }
    }

    pub fn union(self, other: Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self {
            bits: self.bits | other.bits,
            d: self.d,
        }
    }

    pub fn intersection(self, other: Self) -> Self {
        debug_assert_eq!(self.d, other.d);
        Self {
            bits: self.bits & other.bits,
            d: self.d,
        }
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn intersects(self, other: Self) -> bool {
        self.bits & other.bits != 0
    }

    /// Sorted 1-based member indices.
    pub fn indices(self) -> Vec<usize> {
        (1..=self.dim()).filter(|&i| self.contains(i)).collect()
    }

    /// All subsets of this coalition (including the empty set and itself), in increasing bit order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.bits,
            next: Some(0),
            d: self.d,
        }
    }

    /// Every coalition over `d` players ordered by cardinality, then lexicographically
    /// by sorted indices: ∅, {1}, {2}, …, {1,2}, {1,3}, …, [1,d].
    pub fn all_by_cardinality(d: usize) -> Result<Vec<Self>> {
        let full = Self::full(d)?;
        let mut all: Vec<Self> = full.subsets().collect();
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.indices().cmp(&b.indices())));
        Ok(all)
    }

    /// Key used by the JSON game format: comma-joined sorted indices.
    pub fn key(self) -> String {
        self.indices()
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl serde::Serialize for Coalition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.key())
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

/// Submask enumeration.
pub struct Subsets {
    mask: u32,
    next: Option<u32>,
    d: u8,
}

impl Iterator for Subsets {
    type Item = Coalition;

    fn next(&mut self) -> Option<Coalition> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some((cur.wrapping_sub(self.mask)) & self.mask)
        };
        Some(Coalition {
            bits: cur,
            d: self.d,
        })
    }
}

#[inline]
pub(crate) fn full_mask(d: usize) -> u32 {
    if d >= 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d > MAX_DIM {
        Err(Error::DimensionTooLarge { d, max: MAX_DIM })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_membership() {
        let c = Coalition::from_indices(4, &[1, 3]).unwrap();
        assert_eq!(c.bits(), 0b0101);
        assert!(c.contains(1) && c.contains(3) && !c.contains(2));
        assert_eq!(c.len(), 2);
        assert_eq!(c.complement().indices(), vec![2, 4]);
        assert_eq!(c.key(), "1,3");
        assert_eq!(format!("{c}"), "{1,3}");
        assert!(Coalition::empty(3).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_indices() {
        assert!(matches!(
            Coalition::from_indices(3, &[4]),
            Err(Error::IndexOutOfRange { index: 4, d: 3 })
        ));
        assert!(matches!(
            Coalition::from_indices(3, &[0]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            Coalition::from_indices(3, &[2, 2]),
            Err(Error::RepeatedIndex(2))
        ));
        assert!(Coalition::from_bits(2, 0b100).is_err());
        assert!(matches!(
            Coalition::empty(25),
            Err(Error::DimensionTooLarge { d: 25, max: 24 })
        ));
    }

    #[test]
    fn subsets_enumerates_all() {
        let c = Coalition::from_indices(5, &[2, 4, 5]).unwrap();
        let subs: Vec<_> = c.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(c)));
        assert_eq!(Coalition::empty(3).unwrap().subsets().count(), 1);
    }

    #[test]
    fn cardinality_order_matches_table_layout() {
        let keys: Vec<String> = Coalition::all_by_cardinality(3)
            .unwrap()
            .into_iter()
            .map(|c| c.key())
            .collect();
        assert_eq!(keys, vec!["", "1", "2", "3", "1,2", "1,3", "2,3", "1,2,3"]);
    }

    #[test]
    fn parse_round_trip() {
        let c = Coalition::parse(4, " 4, 1 ").unwrap();
        assert_eq!(c.key(), "1,4");
        assert!(Coalition::parse(4, "").unwrap().is_empty());
        assert!(Coalition::parse(4, "1,x").is_err());
    }
}
