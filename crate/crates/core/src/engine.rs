// SPDX-License-Identifier: MIT OR Apache-2.0

//! Cost oracle that fits models only on relief intervals.
//!
//! A query for search interval `I` looks up `R`, the longest pool interval
//! inside `I`, fits (once) the model on `R` and evaluates that model's loss
//! on `I`. Fitted models are cached per pool interval, so over any run the
//! number of fits is bounded by the pool size.

use std::sync::OnceLock;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::models::ModelFamily;
use crate::oracle::{Counters, SegmentCostOracle, check_min_len, check_query};
use crate::relief::ReliefPool;

pub struct RelieverOracle<F: ModelFamily> {
    family: F,
    pool: ReliefPool,
    min_len: usize,
    cache: Vec<OnceLock<F::Model>>,
    fits: AtomicU64,
    evals: AtomicU64,
}

impl<F: ModelFamily> RelieverOracle<F> {
    /// Wraps `family` with `pool`. Fails unless every search interval of
    /// length `min_len` or more contains a pool interval.
    pub fn new(family: F, pool: ReliefPool, min_len: usize) -> Result<Self> {
        check_min_len(family.n(), min_len)?;
        if pool.n() != family.n() {
            return Err(Error::invalid(format!(
                "relief pool was built for n = {} but the series has n = {}",
                pool.n(),
                family.n()
            )));
        }
        if !pool.covers_all(min_len) {
            return Err(Error::invalid(format!(
                "relief pool (delta_m = {}) leaves some interval of length {min_len} uncovered",
                pool.delta_m()
            )));
        }
        let cache = (0..pool.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            family,
            pool,
            min_len,
            cache,
            fits: AtomicU64::new(0),
            evals: AtomicU64::new(0),
        })
    }

    /// Pool from coverage parameter `r` with `delta_m = min_len`.
    pub fn from_coverage(family: F, min_len: usize, r: f64) -> Result<Self> {
        let pool = ReliefPool::from_coverage(family.n(), min_len, r)?;
        Self::new(family, pool, min_len)
    }

    pub fn pool(&self) -> &ReliefPool {
        &self.pool
    }

    pub fn family(&self) -> &F {
        &self.family
    }

    /// Relief intervals whose models have been fitted so far.
    pub fn fitted_intervals(&self) -> Vec<Interval> {
        self.cache
            .iter()
            .zip(self.pool.intervals())
            .filter(|(slot, _)| slot.get().is_some())
            .map(|(_, iv)| *iv)
            .collect()
    }

    /// The relief model used for `iv`, fitting it on first use.
    pub fn relief_model(&self, iv: Interval) -> Result<(Interval, &F::Model)> {
        let id = self
            .pool
            .best_relief_index(iv)
            .ok_or(Error::NoReliefInterval(iv))?;
        let relief = self.pool.intervals()[id];
        let model = self.cache[id].get_or_init(|| {
            self.fits.fetch_add(1, Ordering::Relaxed);
            self.family.fit(relief)
        });
        Ok((relief, model))
    }
}

impl<F: ModelFamily> SegmentCostOracle for RelieverOracle<F> {
    fn n(&self) -> usize {
        self.family.n()
    }

    fn min_len(&self) -> usize {
        self.min_len
    }

    fn cost(&self, iv: Interval) -> Result<f64> {
        check_query(iv, self.family.n(), self.min_len)?;
        let (_, model) = self.relief_model(iv)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        Ok(self.family.loss(model, iv))
    }

    fn counters(&self) -> Counters {
        Counters {
            fits: self.fits.load(Ordering::Relaxed),
            evals: self.evals.load(Ordering::Relaxed),
        }
    }
}
