use std::fmt;

use serde::{Deserialize, Serialize};

/// Hard cap on the feature universe; masks are 32-bit and exhaustive
/// lattice work beyond this is not tractable anyway.
pub const MAX_FEATURES: usize = 24;

/// Subset of the feature universe as a bit mask (bit `i` = feature `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSet(u32);

impl FeatureSet {
    pub const EMPTY: FeatureSet = FeatureSet(0);

    pub const fn from_mask(mask: u32) -> Self {
        FeatureSet(mask)
    }

    /// The full universe of `n` features.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_FEATURES);
        FeatureSet(((1u64 << n) - 1) as u32)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        FeatureSet(indices.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub const fn mask(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, feature: usize) -> bool {
        self.0 & (1 << feature) != 0
    }

    pub fn with(self, feature: usize) -> Self {
        FeatureSet(self.0 | (1 << feature))
    }

    pub fn without(self, feature: usize) -> Self {
        FeatureSet(self.0 & !(1 << feature))
    }

    pub fn union(self, other: Self) -> Self {
        FeatureSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        FeatureSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        FeatureSet(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_strict_subset_of(self, other: Self) -> bool {
        self != other && self.is_subset_of(other)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    /// Sets with one more feature, within a universe of `n` features.
    pub fn parents(self, n: usize) -> impl Iterator<Item = FeatureSet> {
        (0..n).filter(move |&i| !self.contains(i)).map(move |i| self.with(i))
    }

    /// Sets with one feature fewer.
    pub fn children(self) -> impl Iterator<Item = FeatureSet> {
        self.iter().map(move |i| self.without(i))
    }

    /// All subsets of `self`, including the empty set and `self`.
    pub fn subsets(self) -> impl Iterator<Item = FeatureSet> {
        let full = self.0;
        let mut next = Some(full);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == 0 { None } else { Some((cur - 1) & full) };
            Some(FeatureSet(cur))
        })
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "f{i}")?;
        }
        write!(f, "}}")
    }
}
