// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic relief-interval pool.
//!
//! Layer `k` holds evenly shifted intervals of real length
//! `l_k = b^k * delta_m / (1 + w)` with shift `s_k = w * l_k`, centred on
//! `n / 2`. Layers run while `l_k <= n`. Real endpoints are rounded to the
//! nearest integer, clipped to `[0, n]`, and intervals already produced by a
//! lower layer are dropped, so every pool interval is listed exactly once
//! under the layer that first produced it.
//!
//! With `1 + w = b = r^{-1/2}` every search interval of length at least
//! `delta_m` contains a pool interval covering a fraction of roughly `r` of
//! it, while the pool holds `O(n / delta_m)` intervals.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Slack used when flooring ratios that are integers in exact arithmetic.
const FLOOR_EPS: f64 = 1e-9;

/// Default cap on the number of search intervals [`ReliefPool::coverage_rate`]
/// will enumerate.
pub const DEFAULT_COVERAGE_BUDGET: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReliefLayer {
    pub index: usize,
    /// Real (unrounded) interval length.
    pub length: f64,
    /// Real shift between neighbouring intervals.
    pub shift: f64,
    /// Largest position index; the layer has `count + 1` real intervals.
    pub count: usize,
    /// Centring offset.
    pub offset: f64,
    /// Rounded intervals first introduced by this layer, ordered by `lo`.
    pub intervals: Vec<Interval>,
    /// Position `q` in `0..=count` of each entry of `intervals`.
    pub positions: Vec<usize>,
}

/// Pool intervals sharing one integer length, ordered by `lo`.
#[derive(Clone, Debug)]
struct LengthBucket {
    len: usize,
    los: Vec<usize>,
    ids: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct ReliefPool {
    n: usize,
    delta_m: usize,
    wriggle: f64,
    growth: f64,
    layers: Vec<ReliefLayer>,
    intervals: Vec<Interval>,
    /// Buckets ordered by length, longest first.
    buckets: Vec<LengthBucket>,
}

impl ReliefPool {
    /// Builds the pool for wriggle `w ∈ (0, 1]` and growth `b > 1`.
    pub fn build(n: usize, delta_m: usize, wriggle: f64, growth: f64) -> Result<Self> {
        if !(wriggle.is_finite() && wriggle > 0.0 && wriggle <= 1.0) {
            return Err(Error::invalid(format!(
                "wriggle must lie in (0, 1]; got {wriggle}"
            )));
        }
        Self::build_unchecked_wriggle(n, delta_m, wriggle, growth)
    }

    /// Builds the pool from a coverage parameter `r ∈ (0, 1)` using
    /// `1 + w = b = r^{-1/2}`.
    ///
    /// For `r < 1/4` the implied wriggle exceeds one; such pools are still
    /// built, only the size bound constant changes.
    pub fn from_coverage(n: usize, delta_m: usize, r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0 && r < 1.0) {
            return Err(Error::invalid(format!(
                "coverage parameter must lie in (0, 1); got {r}"
            )));
        }
        let growth = r.powf(-0.5);
        Self::build_unchecked_wriggle(n, delta_m, growth - 1.0, growth)
    }

    fn build_unchecked_wriggle(n: usize, delta_m: usize, wriggle: f64, growth: f64) -> Result<Self> {
        if !(growth.is_finite() && growth > 1.0) {
            return Err(Error::invalid(format!("growth must be > 1; got {growth}")));
        }
        if !(wriggle.is_finite() && wriggle > 0.0) {
            return Err(Error::invalid(format!("wriggle must be > 0; got {wriggle}")));
        }
        if delta_m < 2 {
            return Err(Error::invalid(format!(
                "minimum spacing delta_m must be at least 2; got {delta_m}"
            )));
        }
        if n < delta_m {
            return Err(Error::invalid(format!(
                "series length {n} is shorter than delta_m = {delta_m}; no layer exists"
            )));
        }

        let nf = n as f64;
        let base = delta_m as f64 / (1.0 + wriggle);
        let mut seen: HashSet<Interval> = HashSet::new();
        let mut layers = Vec::new();
        let mut intervals = Vec::new();

        for k in 0.. {
            let length = base * growth.powi(k as i32);
            if length > nf * (1.0 + FLOOR_EPS) {
                break;
            }
            let length = length.min(nf);
            let shift = wriggle * length;
            let count = (((nf - length) / shift) + FLOOR_EPS).floor().max(0.0) as usize;
            let offset = nf / 2.0 - (length + count as f64 * shift) / 2.0;

            let mut fresh = Vec::new();
            for q in 0..=count {
                let start = q as f64 * shift + offset;
                let lo = start.round().clamp(0.0, nf) as usize;
                let hi = (start + length).round().clamp(0.0, nf) as usize;
                if lo >= hi {
                    continue;
                }
                let iv = Interval::raw(lo, hi);
                if seen.insert(iv) {
                    fresh.push((iv, q));
                }
            }
            fresh.sort_unstable();
            let (fresh, positions): (Vec<Interval>, Vec<usize>) = fresh.into_iter().unzip();
            intervals.extend_from_slice(&fresh);
            layers.push(ReliefLayer {
                index: k,
                length,
                shift,
                count,
                offset,
                intervals: fresh,
                positions,
            });
        }

        let buckets = build_buckets(&intervals);
        Ok(Self {
            n,
            delta_m,
            wriggle,
            growth,
            layers,
            intervals,
            buckets,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta_m(&self) -> usize {
        self.delta_m
    }

    pub fn wriggle(&self) -> f64 {
        self.wriggle
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn layers(&self) -> &[ReliefLayer] {
        &self.layers
    }

    /// All pool intervals, grouped by layer and ordered by `lo` within a layer.
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `c_{w,b} = (1 + w) b / (w (b - 1))`.
    pub fn size_constant(&self) -> f64 {
        (1.0 + self.wriggle) * self.growth / (self.wriggle * (self.growth - 1.0))
    }

    /// Upper bound `c_{w,b} n / delta_m` on the pool size.
    pub fn size_bound(&self) -> f64 {
        self.size_constant() * self.n as f64 / self.delta_m as f64
    }

    /// Guaranteed coverage `1 / ((1 + w) b)` before endpoint rounding.
    pub fn nominal_coverage(&self) -> f64 {
        1.0 / ((1.0 + self.wriggle) * self.growth)
    }

    /// Index into [`Self::intervals`] of the longest pool interval inside
    /// `query`; ties go to the smallest `lo`.
    pub fn best_relief_index(&self, query: Interval) -> Option<usize> {
        let start = self
            .buckets
            .partition_point(|bucket| bucket.len > query.len());
        for bucket in &self.buckets[start..] {
            let pos = bucket.los.partition_point(|&lo| lo < query.lo());
            if let Some(&lo) = bucket.los.get(pos) {
                if lo + bucket.len <= query.hi() {
                    return Some(bucket.ids[pos]);
                }
            }
        }
        None
    }

    /// Longest pool interval contained in `query` (smallest `lo` on ties).
    pub fn best_relief(&self, query: Interval) -> Option<Interval> {
        self.best_relief_index(query).map(|id| self.intervals[id])
    }

    /// Exact coverage rate by enumerating every search interval of length at
    /// least `delta_m`. Returns 0 when some interval contains no pool
    /// interval.
    pub fn coverage_rate(&self) -> Result<f64> {
        self.coverage_rate_with_budget(DEFAULT_COVERAGE_BUDGET)
    }

    pub fn coverage_rate_with_budget(&self, budget: usize) -> Result<f64> {
        let searches = search_interval_count(self.n, self.delta_m);
        if searches as usize > budget {
            return Err(Error::Budget(format!(
                "{searches} search intervals for n = {} exceed the budget of {budget}",
                self.n
            )));
        }
        let mut worst = 1.0_f64;
        for len in self.delta_m..=self.n {
            for lo in 0..=(self.n - len) {
                let query = Interval::raw(lo, lo + len);
                let ratio = match self.best_relief(query) {
                    Some(r) => r.len() as f64 / len as f64,
                    None => return Ok(0.0),
                };
                worst = worst.min(ratio);
            }
        }
        Ok(worst)
    }

    /// `true` when every interval of length `min_len` (and hence every longer
    /// one) contains a pool interval.
    pub fn covers_all(&self, min_len: usize) -> bool {
        if min_len > self.n {
            return true;
        }
        (0..=self.n - min_len).all(|lo| {
            self.best_relief_index(Interval::raw(lo, lo + min_len))
                .is_some()
        })
    }
}

/// Number of intervals of length at least `delta_m` inside `(0, n]`:
/// `sum_{l = delta_m}^{n} (n - l + 1)`.
pub fn search_interval_count(n: usize, delta_m: usize) -> u64 {
    if delta_m > n {
        return 0;
    }
    let m = (n - delta_m + 1) as u64;
    m * (m + 1) / 2
}

fn build_buckets(intervals: &[Interval]) -> Vec<LengthBucket> {
    let mut order: Vec<usize> = (0..intervals.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let (ia, ib) = (intervals[a], intervals[b]);
        ib.len().cmp(&ia.len()).then(ia.lo().cmp(&ib.lo()))
    });
    let mut buckets: Vec<LengthBucket> = Vec::new();
    for id in order {
        let iv = intervals[id];
        match buckets.last_mut() {
            Some(bucket) if bucket.len == iv.len() => {
                bucket.los.push(iv.lo());
                bucket.ids.push(id);
            }
            _ => buckets.push(LengthBucket {
                len: iv.len(),
                los: vec![iv.lo()],
                ids: vec![id],
            }),
        }
    }
    buckets
}
