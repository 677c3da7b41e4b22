// SPDX-License-Identifier: MIT OR Apache-2.0

//! Greedy splitting: binary segmentation and its wild and seeded variants.
//!
//! All three share [`greedy_search`]. Each candidate interval carries its
//! best split; the globally best split is accepted, candidates straddling it
//! are discarded and the two new segments join the candidates. BS starts
//! from the full interval only, WBS adds random intervals and SeedBS adds
//! seeded intervals.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::oracle::{Counters, SegmentCostOracle};
use crate::search::{Diagnostics, SearchConfig, Segmentation, Stopping, seeded_intervals};

/// Redraws allowed per random interval before it is skipped.
const MAX_REDRAWS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Split {
    pub tau: usize,
    pub gain: f64,
}

/// Finds the best single split inside a segment.
pub trait SplitFinder: Sync {
    fn n(&self) -> usize;

    fn delta_m(&self) -> usize;

    /// Best admissible split of `seg`, or `None` when `seg` is shorter than
    /// `2 delta_m`.
    fn best_split(&self, seg: Interval) -> Result<Option<Split>>;

    /// Cost of an accepted segment, for reporting.
    fn segment_cost(&self, seg: Interval) -> Result<f64>;

    fn counters(&self) -> Counters;
}

/// Split finder that scans every admissible `tau` with a cost oracle:
/// `gain(tau) = cost((s, e]) - cost((s, tau]) - cost((tau, e])`.
pub struct CostSplits<'a, O: ?Sized> {
    oracle: &'a O,
    delta_m: usize,
}

impl<'a, O: SegmentCostOracle + ?Sized> CostSplits<'a, O> {
    pub fn new(oracle: &'a O, delta_m: usize) -> Result<Self> {
        if delta_m < oracle.min_len().max(1) {
            return Err(Error::invalid(format!(
                "delta_m = {delta_m} is below the oracle's minimum segment length {}",
                oracle.min_len()
            )));
        }
        Ok(Self { oracle, delta_m })
    }
}

impl<O: SegmentCostOracle + ?Sized> SplitFinder for CostSplits<'_, O> {
    fn n(&self) -> usize {
        self.oracle.n()
    }

    fn delta_m(&self) -> usize {
        self.delta_m
    }

    fn best_split(&self, seg: Interval) -> Result<Option<Split>> {
        let d = self.delta_m;
        if seg.len() < 2 * d {
            return Ok(None);
        }
        let whole = self.oracle.cost(seg)?;
        let mut best: Option<Split> = None;
        for tau in (seg.lo() + d)..=(seg.hi() - d) {
            let left = self.oracle.cost(Interval::raw(seg.lo(), tau))?;
            let right = self.oracle.cost(Interval::raw(tau, seg.hi()))?;
            let gain = whole - left - right;
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Split { tau, gain });
            }
        }
        Ok(best)
    }

    fn segment_cost(&self, seg: Interval) -> Result<f64> {
        self.oracle.cost(seg)
    }

    fn counters(&self) -> Counters {
        self.oracle.counters()
    }
}

struct Candidate {
    iv: Interval,
    split: Split,
}

/// Greedy multi-split search seeded with `extra` intervals on top of the
/// full interval `(0, n]`.
pub fn greedy_search<S: SplitFinder + ?Sized>(
    finder: &S,
    extra: &[Interval],
    stopping: Stopping,
) -> Result<Segmentation> {
    let n = finder.n();
    let start = Instant::now();
    let before = finder.counters();

    let mut seen = std::collections::HashSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut consider = |iv: Interval, candidates: &mut Vec<Candidate>| -> Result<()> {
        if iv.hi() > n {
            return Err(Error::invalid(format!("interval {iv} exceeds n = {n}")));
        }
        if seen.insert(iv) {
            if let Some(split) = finder.best_split(iv)? {
                candidates.push(Candidate { iv, split });
            }
        }
        Ok(())
    };
    consider(Interval::raw(0, n), &mut candidates)?;
    for &iv in extra {
        consider(iv, &mut candidates)?;
    }

    let mut cps: Vec<usize> = Vec::new();
    loop {
        if let Stopping::KnownK(k) = stopping {
            if cps.len() >= k {
                break;
            }
        }
        let Some(pick) = candidates
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| {
                a.split
                    .gain
                    .total_cmp(&b.split.gain)
                    .then(b.split.tau.cmp(&a.split.tau))
                    .then(b.iv.cmp(&a.iv))
            })
            .map(|(i, _)| i)
        else {
            break;
        };
        let split = candidates[pick].split;
        if let Stopping::Threshold(zeta) = stopping {
            if !(split.gain >= zeta) {
                break;
            }
        }
        let tau = split.tau;
        let pos = cps.partition_point(|&c| c < tau);
        let left_end = if pos == 0 { 0 } else { cps[pos - 1] };
        let right_end = cps.get(pos).copied().unwrap_or(n);
        cps.insert(pos, tau);
        candidates.retain(|c| !c.iv.straddles(tau));
        consider(Interval::raw(left_end, tau), &mut candidates)?;
        consider(Interval::raw(tau, right_end), &mut candidates)?;
    }

    let counters = finder.counters().since(before);
    let wall_time = start.elapsed();
    let mut per_segment = Vec::with_capacity(cps.len() + 1);
    let mut prev = 0;
    for &end in cps.iter().chain(std::iter::once(&n)) {
        per_segment.push(finder.segment_cost(Interval::raw(prev, end))?);
        prev = end;
    }
    let total: f64 = per_segment.iter().sum();
    Ok(Segmentation {
        changepoints: cps,
        total_cost: total,
        objective: total,
        per_segment_costs: per_segment,
        diagnostics: Diagnostics::new(counters, wall_time),
    })
}

fn check_greedy(n: usize, cfg: &SearchConfig) -> Result<()> {
    if cfg.delta_m == 0 {
        return Err(Error::invalid("delta_m must be at least 1"));
    }
    if n < 2 * cfg.delta_m {
        return Err(Error::Infeasible(format!(
            "binary segmentation needs n >= 2 delta_m; got n = {n}, delta_m = {}",
            cfg.delta_m
        )));
    }
    Ok(())
}

/// Binary segmentation. With `KnownK(k)` the `k` best splits are taken in
/// order of gain across all current segments.
pub fn bs_search<O: SegmentCostOracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Result<Segmentation> {
    check_greedy(oracle.n(), cfg)?;
    greedy_search(&CostSplits::new(oracle, cfg.delta_m)?, &[], cfg.stopping)
}

/// `m` random intervals `(lo, hi]` with `hi - lo >= min_width`, drawn
/// uniformly with a ChaCha8 generator seeded from `seed`. Each draw is
/// retried up to a fixed number of times and skipped if it stays too short.
pub fn wbs_intervals(n: usize, m: usize, min_width: usize, seed: u64) -> Vec<Interval> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    if min_width > n {
        return out;
    }
    for _ in 0..m {
        for _ in 0..MAX_REDRAWS {
            let a = rng.random_range(0..=n);
            let b = rng.random_range(0..=n);
            let (lo, hi) = (a.min(b), a.max(b));
            if hi - lo >= min_width.max(1) {
                out.push(Interval::raw(lo, hi));
                break;
            }
        }
    }
    out
}

/// Wild binary segmentation with `cfg.wild_intervals` random intervals.
pub fn wbs_search<O: SegmentCostOracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Result<Segmentation> {
    check_greedy(oracle.n(), cfg)?;
    if cfg.wild_intervals == 0 {
        return Err(Error::invalid("WBS needs at least one random interval"));
    }
    let extra = wbs_intervals(oracle.n(), cfg.wild_intervals, 2 * cfg.delta_m, cfg.seed);
    greedy_search(&CostSplits::new(oracle, cfg.delta_m)?, &extra, cfg.stopping)
}

/// Seeded binary segmentation over [`seeded_intervals`] with decay `cfg.decay`.
pub fn seedbs_search<O: SegmentCostOracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Result<Segmentation> {
    check_greedy(oracle.n(), cfg)?;
    let extra = seeded_intervals(oracle.n(), cfg.decay, cfg.delta_m)?;
    greedy_search(&CostSplits::new(oracle, cfg.delta_m)?, &extra, cfg.stopping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SeriesData;
    use crate::models::MeanFamily;
    use crate::oracle::DirectOracle;
    use crate::search::respects_spacing;

    fn mean_oracle(z: Vec<f64>, delta: usize) -> DirectOracle<MeanFamily> {
        let data = SeriesData::univariate(z).unwrap();
        DirectOracle::new(MeanFamily::new(&data).unwrap(), delta)
            .unwrap()
            .with_memo()
    }

    fn sse(z: &[f64]) -> f64 {
        let mu = z.iter().sum::<f64>() / z.len() as f64;
        z.iter().map(|v| (v - mu).powi(2)).sum()
    }

    /// Brute-force best split of `z[lo..hi]`.
    fn brute_split(z: &[f64], lo: usize, hi: usize, d: usize) -> (usize, f64) {
        let whole = sse(&z[lo..hi]);
        let mut best = (0, f64::NEG_INFINITY);
        for tau in lo + d..=hi - d {
            let g = whole - sse(&z[lo..tau]) - sse(&z[tau..hi]);
            if g > best.1 {
                best = (tau, g);
            }
        }
        best
    }

    fn noisy_steps(levels: &[(usize, f64)], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        levels
            .iter()
            .flat_map(|&(len, mu)| (0..len).map(move |_| mu).collect::<Vec<_>>())
            .map(|mu| mu + rng.random_range(-0.5..0.5))
            .collect()
    }

    #[test]
    fn single_shift_matches_brute_force() {
        let z = noisy_steps(&[(50, 0.0), (50, 2.0)], 1);
        let o = mean_oracle(z.clone(), 3);
        let mut cfg = SearchConfig::with_delta_m(3);
        cfg.stopping = Stopping::KnownK(1);
        let res = bs_search(&o, &cfg).unwrap();
        let (tau, _) = brute_split(&z, 0, 100, 3);
        assert_eq!(res.changepoints, vec![tau]);
        assert!((tau as i64 - 50).abs() <= 2);
    }

    #[test]
    fn two_shifts_follow_recursive_oracle() {
        let z = noisy_steps(&[(40, 0.0), (40, 3.0), (40, -1.0)], 2);
        let o = mean_oracle(z.clone(), 5);
        let mut cfg = SearchConfig::with_delta_m(5);
        cfg.stopping = Stopping::KnownK(2);
        let res = bs_search(&o, &cfg).unwrap();

        let (t1, _) = brute_split(&z, 0, 120, 5);
        let (l, gl) = brute_split(&z, 0, t1, 5);
        let (r, gr) = brute_split(&z, t1, 120, 5);
        let t2 = if gl >= gr { l } else { r };
        let mut expected = vec![t1, t2];
        expected.sort_unstable();
        assert_eq!(res.changepoints, expected);
        assert!((res.changepoints[0] as i64 - 40).abs() <= 2);
        assert!((res.changepoints[1] as i64 - 80).abs() <= 2);
        assert!(respects_spacing(&res.changepoints, 120, 5));
    }

    #[test]
    fn threshold_stops_on_flat_data() {
        let z = noisy_steps(&[(100, 1.0)], 3);
        let o = mean_oracle(z, 5);
        let mut cfg = SearchConfig::with_delta_m(5);
        cfg.stopping = Stopping::Threshold(1e3);
        assert!(bs_search(&o, &cfg).unwrap().changepoints.is_empty());
        cfg.stopping = Stopping::Threshold(0.0);
        let res = bs_search(&o, &cfg).unwrap();
        assert!(!res.changepoints.is_empty());
        assert!(respects_spacing(&res.changepoints, 100, 5));
    }

    #[test]
    fn wbs_with_full_interval_is_bs() {
        let z = noisy_steps(&[(30, 0.0), (30, 1.5), (30, 0.0)], 4);
        let o = mean_oracle(z, 4);
        let finder = CostSplits::new(&o, 4).unwrap();
        let full = [Interval::raw(0, 90)];
        let a = greedy_search(&finder, &full, Stopping::KnownK(1)).unwrap();
        let mut cfg = SearchConfig::with_delta_m(4);
        cfg.stopping = Stopping::KnownK(1);
        let b = bs_search(&o, &cfg).unwrap();
        assert_eq!(a.changepoints, b.changepoints);
    }

    #[test]
    fn wbs_is_reproducible() {
        let z = noisy_steps(&[(60, 0.0), (20, 2.0), (60, 0.0)], 5);
        let mut cfg = SearchConfig::with_delta_m(5);
        cfg.stopping = Stopping::KnownK(2);
        cfg.wild_intervals = 50;
        cfg.seed = 17;
        let a = wbs_search(&mean_oracle(z.clone(), 5), &cfg).unwrap();
        let b = wbs_search(&mean_oracle(z, 5), &cfg).unwrap();
        assert_eq!(a.changepoints, b.changepoints);
        assert_eq!(a.total_cost.to_bits(), b.total_cost.to_bits());
        assert_eq!(a.changepoints.len(), 2);
        assert!((a.changepoints[0] as i64 - 60).abs() <= 2);
        assert!((a.changepoints[1] as i64 - 80).abs() <= 2);
    }

    #[test]
    fn seedbs_recovers_short_bump() {
        let z = noisy_steps(&[(60, 0.0), (20, 2.0), (60, 0.0)], 6);
        let o = mean_oracle(z, 5);
        let mut cfg = SearchConfig::with_delta_m(5);
        cfg.stopping = Stopping::KnownK(2);
        let res = seedbs_search(&o, &cfg).unwrap();
        assert_eq!(res.changepoints.len(), 2);
        assert!((res.changepoints[0] as i64 - 60).abs() <= 2);
        assert!((res.changepoints[1] as i64 - 80).abs() <= 2);
    }

    #[test]
    fn random_intervals_are_wide_enough() {
        let set = wbs_intervals(100, 200, 10, 3);
        assert_eq!(set.len(), 200);
        assert!(set.iter().all(|s| s.len() >= 10 && s.hi() <= 100));
        assert_eq!(set, wbs_intervals(100, 200, 10, 3));
        assert_ne!(set, wbs_intervals(100, 200, 10, 4));
    }
}
