//! Compact set types used throughout the crate.
//!
//! Two universes appear in every algorithm here and have very different
//! sizes, so they get different representations:
//!
//! - [`DecoderSet`]: a subset of the decoders `1..=m` (`m <= 16`), stored as
//!   a `u16` bitmask. Decoder `d` occupies bit `d - 1`, so the numeric value
//!   of the mask gives the canonical "ascending bitmask" order used when
//!   message tables are processed level by level.
//! - [`SourceSet`]: a subset of the source bits `0..s` (`s <= 4096`), stored
//!   as a word-packed bitset. These live in the hot loops of the chain-bound
//!   dynamic program, so the representation favors word-parallel set algebra.

use std::fmt;

/// Maximum number of decoders supported by [`DecoderSet`] (and the crate).
pub const MAX_DECODERS: u8 = 16;

/// A 1-based decoder index in `1..=m`.
pub type DecoderId = u8;

// ============================================================================
// DecoderSet
// ============================================================================

/// A subset of decoders `1..=m`, stored as a `u16` bitmask.
///
/// Ordering of the raw mask value is the canonical subset order used for
/// message processing: comparing `(len, mask)` pairs sorts subsets by level
/// first and by ascending bitmask within a level.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DecoderSet(u16);

impl DecoderSet {
    /// The empty set.
    pub const EMPTY: Self = Self(0);

    /// Creates a set from a raw bitmask (bit `d - 1` represents decoder `d`).
    #[inline]
    #[must_use]
    pub const fn from_mask(mask: u16) -> Self {
        Self(mask)
    }

    /// Returns the raw bitmask.
    #[inline]
    #[must_use]
    pub const fn mask(self) -> u16 {
        self.0
    }

    /// The full set `{1, ..., m}`.
    ///
    /// # Panics
    ///
    /// Panics if `m > 16`.
    #[inline]
    #[must_use]
    pub fn full(m: u8) -> Self {
        assert!(m <= MAX_DECODERS, "at most {MAX_DECODERS} decoders");
        if m == 16 {
            Self(u16::MAX)
        } else {
            Self((1u16 << m) - 1)
        }
    }

    /// The singleton `{d}`.
    #[inline]
    #[must_use]
    pub fn singleton(d: DecoderId) -> Self {
        debug_assert!((1..=MAX_DECODERS).contains(&d));
        Self(1 << (d - 1))
    }

    /// Builds a set from 1-based decoder indices.
    #[must_use]
    pub fn from_ids<I: IntoIterator<Item = DecoderId>>(ids: I) -> Self {
        let mut s = Self::EMPTY;
        for d in ids {
            s.insert(d);
        }
        s
    }

    /// Number of decoders in the set.
    #[inline]
    #[must_use]
    pub const fn len(self) -> u32 {
        self.0.count_ones()
    }

    /// True if the set is empty.
    #[inline]
    #[must_use]
    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// True if decoder `d` is in the set.
    #[inline]
    #[must_use]
    pub const fn contains(self, d: DecoderId) -> bool {
        d >= 1 && d <= MAX_DECODERS && (self.0 >> (d - 1)) & 1 == 1
    }

    /// Inserts decoder `d`.
    #[inline]
    pub fn insert(&mut self, d: DecoderId) {
        debug_assert!((1..=MAX_DECODERS).contains(&d));
        self.0 |= 1 << (d - 1);
    }

    /// Removes decoder `d`.
    #[inline]
    pub fn remove(&mut self, d: DecoderId) {
        debug_assert!((1..=MAX_DECODERS).contains(&d));
        self.0 &= !(1 << (d - 1));
    }

    /// Set union.
    #[inline]
    #[must_use]
    pub const fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    /// Set intersection.
    #[inline]
    #[must_use]
    pub const fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    /// Set difference `self \ other`.
    #[inline]
    #[must_use]
    pub const fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    /// Complement within `{1, ..., m}`.
    #[inline]
    #[must_use]
    pub fn complement(self, m: u8) -> Self {
        Self(!self.0 & Self::full(m).0)
    }

    /// True if `self` is a subset of `other`.
    #[inline]
    #[must_use]
    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest decoder index in the set, if any.
    #[inline]
    #[must_use]
    pub fn lowest(self) -> Option<DecoderId> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as DecoderId + 1)
        }
    }

    /// Iterates over decoder indices in ascending order.
    pub fn iter(self) -> impl Iterator<Item = DecoderId> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let d = rest.trailing_zeros() as DecoderId + 1;
                rest &= rest - 1;
                Some(d)
            }
        })
    }
}

impl fmt::Debug for DecoderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for DecoderSet {
    /// Renders as `{1,2,4}` (or `{}` for the empty set).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for d in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        write!(f, "}}")
    }
}

/// Orders decoder subsets by `(cardinality, ascending bitmask)` — the
/// canonical processing order for message tables.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Hash)]
pub struct LevelOrdered(pub DecoderSet);

impl Ord for LevelOrdered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.0.len(), self.0.mask()).cmp(&(other.0.len(), other.0.mask()))
    }
}

impl PartialOrd for LevelOrdered {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

// ============================================================================
// SourceSet
// ============================================================================

/// A subset of the source bits `0..universe`, stored as packed 64-bit words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SourceSet {
    words: Vec<u64>,
    universe: usize,
}

impl SourceSet {
    /// The empty set over a universe of `universe` source bits.
    #[must_use]
    pub fn empty(universe: usize) -> Self {
        Self {
            words: vec![0; universe.div_ceil(64)],
            universe,
        }
    }

    /// The full set `{0, ..., universe - 1}`.
    #[must_use]
    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for w in &mut s.words {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    /// Number of source bits in the whole universe (not the set).
    #[inline]
    #[must_use]
    pub fn universe(&self) -> usize {
        self.universe
    }

    /// Clears excess bits beyond the universe in the last word.
    fn trim(&mut self) {
        let tail = self.universe % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// True if source bit `k` is in the set.
    #[inline]
    #[must_use]
    pub fn contains(&self, k: usize) -> bool {
        debug_assert!(k < self.universe);
        (self.words[k / 64] >> (k % 64)) & 1 == 1
    }

    /// Inserts source bit `k`.
    #[inline]
    pub fn insert(&mut self, k: usize) {
        debug_assert!(k < self.universe);
        self.words[k / 64] |= 1 << (k % 64);
    }

    /// Removes source bit `k`.
    #[inline]
    pub fn remove(&mut self, k: usize) {
        debug_assert!(k < self.universe);
        self.words[k / 64] &= !(1 << (k % 64));
    }

    /// Number of source bits in the set.
    #[must_use]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// True if the set is empty.
    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// In-place union.
    pub fn union_with(&mut self, other: &Self) {
        debug_assert_eq!(self.universe, other.universe);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// True if `self` is a subset of `other`.
    #[must_use]
    pub fn is_subset(&self, other: &Self) -> bool {
        debug_assert_eq!(self.universe, other.universe);
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// `|self \ other|` without materializing the difference.
    #[must_use]
    pub fn difference_len(&self, other: &Self) -> usize {
        debug_assert_eq!(self.universe, other.universe);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }

    /// Iterates over member source bits in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let k = wi * 64 + rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(k)
                }
            })
        })
    }
}

impl fmt::Debug for SourceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_set_roundtrip_and_algebra() {
        let a = DecoderSet::from_ids([1, 3, 4]);
        assert_eq!(a.mask(), 0b1101);
        assert_eq!(a.len(), 3);
        assert!(a.contains(3) && !a.contains(2));
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(a.to_string(), "{1,3,4}");

        let b = DecoderSet::from_ids([3, 2]);
        assert_eq!(a.union(b).iter().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(a.intersection(b).iter().collect::<Vec<_>>(), vec![3]);
        assert_eq!(a.difference(b).iter().collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(a.complement(5).iter().collect::<Vec<_>>(), vec![2, 5]);
        assert!(DecoderSet::from_ids([3]).is_subset(a));
        assert!(!a.is_subset(b));
        assert_eq!(a.lowest(), Some(1));
        assert_eq!(DecoderSet::EMPTY.lowest(), None);
    }

    #[test]
    fn level_order_sorts_by_cardinality_then_mask() {
        let mut keys = vec![
            LevelOrdered(DecoderSet::from_ids([2, 3])),
            LevelOrdered(DecoderSet::from_ids([1, 2, 3])),
            LevelOrdered(DecoderSet::from_ids([1, 3])),
            LevelOrdered(DecoderSet::from_ids([1, 2])),
            LevelOrdered(DecoderSet::from_ids([4])),
        ];
        keys.sort();
        let order: Vec<String> = keys.iter().map(|k| k.0.to_string()).collect();
        assert_eq!(order, vec!["{4}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"]);
    }

    #[test]
    fn source_set_word_boundaries() {
        let mut s = SourceSet::empty(130);
        for k in [0, 63, 64, 127, 128, 129] {
            s.insert(k);
        }
        assert_eq!(s.len(), 6);
        assert!(s.contains(64) && !s.contains(65));
        s.remove(64);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 63, 127, 128, 129]);

        let full = SourceSet::full(130);
        assert_eq!(full.len(), 130);
        assert!(s.is_subset(&full));
        assert_eq!(full.difference_len(&s), 125);
    }
}
