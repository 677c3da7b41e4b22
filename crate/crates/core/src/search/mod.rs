// SPDX-License-Identifier: MIT OR Apache-2.0

//! Grid-search algorithms over a [`SegmentCostOracle`](crate::SegmentCostOracle).
//!
//! - exact dynamic programmes: [`sn_search`] (fixed number of changepoints),
//!   [`op_search`] and [`pelt_search`] (penalised);
//! - greedy splitting: [`bs_search`], [`wbs_search`], [`seedbs_search`].

mod binseg;
mod dp;
mod seeded;

pub use binseg::{
    CostSplits, Split, SplitFinder, bs_search, greedy_search, wbs_intervals, wbs_search,
    seedbs_search,
};
pub use dp::{op_search, pelt_search, sn_search};
pub use seeded::seeded_intervals;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Counters;

/// Stopping rule for the greedy splitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    /// Stop after this many accepted changepoints.
    KnownK(usize),
    /// Keep splitting while the best gain is at least this value.
    Threshold(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Minimum spacing between consecutive changepoints (and the boundaries).
    pub delta_m: usize,
    /// Per-changepoint penalty for OP and PELT.
    pub gamma: f64,
    /// Stopping rule for BS, WBS and SeedBS.
    pub stopping: Stopping,
    /// Number of random intervals drawn by WBS.
    pub wild_intervals: usize,
    /// Decay `a` of the seeded interval lengths.
    pub decay: f64,
    pub seed: u64,
    pub prune_margin: f64,
    pub pruning: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            delta_m: 1,
            gamma: 0.0,
            stopping: Stopping::KnownK(1),
            wild_intervals: 100,
            decay: std::f64::consts::FRAC_1_SQRT_2,
            seed: 0,
            prune_margin: 0.0,
            pruning: true,
        }
    }
}

impl SearchConfig {
    pub fn with_delta_m(delta_m: usize) -> Self {
        Self {
            delta_m,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self, n: usize, oracle_min_len: usize) -> Result<()> {
        if self.delta_m == 0 {
            return Err(Error::invalid("delta_m must be at least 1"));
        }
        if self.delta_m < oracle_min_len {
            return Err(Error::invalid(format!(
                "delta_m = {} is below the oracle's minimum segment length {oracle_min_len}",
                self.delta_m
            )));
        }
        if n < self.delta_m {
            return Err(Error::Infeasible(format!(
                "series length {n} is shorter than delta_m = {}",
                self.delta_m
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be >= 0; got {}", self.gamma)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub fits: u64,
    pub evals: u64,
    #[serde(serialize_with = "as_millis")]
    pub wall_time: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

impl Diagnostics {
    pub(crate) fn new(counters: Counters, wall_time: Duration) -> Self {
        Self {
            fits: counters.fits,
            evals: counters.evals,
            wall_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segmentation {
    /// Strictly increasing changepoints in `(0, n)`.
    pub changepoints: Vec<usize>,
    /// Sum of the segment costs.
    pub total_cost: f64,
    /// The minimised criterion: `total_cost + gamma * K` for OP and PELT,
    /// `total_cost` otherwise.
    pub objective: f64,
    pub per_segment_costs: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl Segmentation {
    pub fn k(&self) -> usize {
        self.changepoints.len()
    }
}

/// `true` when consecutive changepoints, including the boundaries `0` and
/// `n`, are at least `delta_m` apart.
pub fn respects_spacing(changepoints: &[usize], n: usize, delta_m: usize) -> bool {
    let mut prev = 0;
    for &cp in changepoints.iter().chain(std::iter::once(&n)) {
        if cp < prev || cp - prev < delta_m {
            return false;
        }
        prev = cp;
    }
    true
}
