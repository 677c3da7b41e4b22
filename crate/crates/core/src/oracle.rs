// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment cost oracles and the direct (fit-on-every-interval) implementation.

use std::collections::HashMap;
use std::sync::Mutex;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::models::ModelFamily;

/// Model-fit and loss-evaluation counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub fits: u64,
    pub evals: u64,
}

impl Counters {
    /// Counts accumulated since `earlier`.
    pub fn since(self, earlier: Counters) -> Counters {
        Counters {
            fits: self.fits - earlier.fits,
            evals: self.evals - earlier.evals,
        }
    }
}

/// Maps a search interval to the loss of a segment model on it.
///
/// Implementations must return the same value for the same interval and may
/// be called from several threads at once.
pub trait SegmentCostOracle: Sync {
    /// Length of the series.
    fn n(&self) -> usize;

    /// Minimum segment length `delta_m` the oracle accepts.
    fn min_len(&self) -> usize;

    fn cost(&self, iv: Interval) -> Result<f64>;

    fn counters(&self) -> Counters;
}

impl<O: SegmentCostOracle + ?Sized> SegmentCostOracle for &O {
    fn n(&self) -> usize {
        (**self).n()
    }

    fn min_len(&self) -> usize {
        (**self).min_len()
    }

    fn cost(&self, iv: Interval) -> Result<f64> {
        (**self).cost(iv)
    }

    fn counters(&self) -> Counters {
        (**self).counters()
    }
}

pub(crate) fn check_query(iv: Interval, n: usize, min_len: usize) -> Result<()> {
    if iv.hi() > n {
        return Err(Error::invalid(format!(
            "interval {iv} exceeds the series length {n}"
        )));
    }
    if iv.len() < min_len {
        return Err(Error::invalid(format!(
            "interval {iv} is shorter than the minimum segment length {min_len}"
        )));
    }
    Ok(())
}

pub(crate) fn check_min_len(n: usize, min_len: usize) -> Result<()> {
    if min_len == 0 {
        return Err(Error::invalid("minimum segment length must be at least 1"));
    }
    if min_len > n {
        return Err(Error::invalid(format!(
            "minimum segment length {min_len} exceeds the series length {n}"
        )));
    }
    Ok(())
}

/// Fits a fresh model on every queried interval and evaluates it there.
pub struct DirectOracle<F: ModelFamily> {
    family: F,
    min_len: usize,
    memo: Option<Mutex<HashMap<Interval, f64>>>,
    fits: AtomicU64,
    evals: AtomicU64,
}

impl<F: ModelFamily> DirectOracle<F> {
    pub fn new(family: F, min_len: usize) -> Result<Self> {
        check_min_len(family.n(), min_len)?;
        Ok(Self {
            family,
            min_len,
            memo: None,
            fits: AtomicU64::new(0),
            evals: AtomicU64::new(0),
        })
    }

    /// Remembers each interval's cost so repeat queries skip the fit.
    pub fn with_memo(mut self) -> Self {
        self.memo = Some(Mutex::new(HashMap::new()));
        self
    }

    pub fn family(&self) -> &F {
        &self.family
    }
}

impl<F: ModelFamily> SegmentCostOracle for DirectOracle<F> {
    fn n(&self) -> usize {
        self.family.n()
    }

    fn min_len(&self) -> usize {
        self.min_len
    }

    fn cost(&self, iv: Interval) -> Result<f64> {
        check_query(iv, self.family.n(), self.min_len)?;
        self.evals.fetch_add(1, Ordering::Relaxed);
        if let Some(memo) = &self.memo {
            if let Some(&c) = memo.lock().expect("memo lock poisoned").get(&iv) {
                return Ok(c);
            }
        }
        self.fits.fetch_add(1, Ordering::Relaxed);
        let model = self.family.fit(iv);
        let c = self.family.loss(&model, iv);
        if let Some(memo) = &self.memo {
            memo.lock().expect("memo lock poisoned").insert(iv, c);
        }
        Ok(c)
    }

    fn counters(&self) -> Counters {
        Counters {
            fits: self.fits.load(Ordering::Relaxed),
            evals: self.evals.load(Ordering::Relaxed),
        }
    }
}
