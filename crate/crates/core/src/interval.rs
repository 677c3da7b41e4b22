// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open index range `(lo, hi]`, i.e. the observations `lo+1, ..., hi`
/// in one-based numbering (`lo..hi` as a zero-based slice range).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Interval {
    lo: usize,
    hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self> {
        if lo >= hi {
            return Err(Error::invalid(format!(
                "interval ({lo}, {hi}] is empty; need lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Builds an interval whose validity the caller has already established.
    pub(crate) const fn raw(lo: usize, hi: usize) -> Self {
        debug_assert!(lo < hi);
        Self { lo, hi }
    }

    /// Validates that the interval lies inside `(0, n]`.
    pub fn checked_within(lo: usize, hi: usize, n: usize) -> Result<Self> {
        let iv = Self::new(lo, hi)?;
        if hi > n {
            return Err(Error::invalid(format!(
                "interval {iv} exceeds the series length {n}"
            )));
        }
        Ok(iv)
    }

    #[inline]
    pub const fn lo(&self) -> usize {
        self.lo
    }

    #[inline]
    pub const fn hi(&self) -> usize {
        self.hi
    }

    #[inline]
    #[allow(clippy::len_without_is_empty)]
    pub const fn len(&self) -> usize {
        self.hi - self.lo
    }

    /// Zero-based slice range of the covered observations.
    #[inline]
    pub const fn range(&self) -> std::ops::Range<usize> {
        self.lo..self.hi
    }

    /// `true` when `other ⊆ self`.
    #[inline]
    pub const fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `true` when `tau` lies strictly inside, so that splitting at `tau`
    /// leaves two non-empty pieces.
    #[inline]
    pub const fn straddles(&self, tau: usize) -> bool {
        self.lo < tau && tau < self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}
