// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-step comparator: fit one regression on each side of an initial guess,
//! then rescan for the split that best separates the two fixed models.
//!
//! [`TwoStepSplits`] plugs the same procedure into the greedy splitters, with
//! equally spaced quantile guesses inside every candidate interval.

use std::sync::Arc;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::data::{Design, SeriesData};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::models::{CdSettings, LassoFamily, LassoModel, ModelFamily, PrefixStats};
use crate::oracle::Counters;
use crate::search::{Split, SplitFinder};

/// Initial changepoint guesses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Guesses {
    /// Explicit guesses on the full series.
    Fixed(Vec<usize>),
    /// `m` equally spaced quantile guesses inside each interval.
    Quantiles(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoStepConfig {
    pub guesses: Guesses,
    pub lambda_base: f64,
    /// Minimum distance of guesses and of the rescanned split from the
    /// interval ends.
    pub delta_m: usize,
    pub cd: CdSettings,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoStepResult {
    pub tau: usize,
    /// Summed squared residuals of the two fixed models around `tau`.
    pub total_loss: f64,
    /// Guess that produced `tau`.
    pub guess: usize,
}

/// `I.lo + floor(j |I| / (m + 1))` for `j = 1..=m`.
pub fn quantile_guesses(iv: Interval, m: usize) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::invalid("at least one guess is required"));
    }
    if iv.len() <= m + 1 {
        return Err(Error::invalid(format!(
            "interval {iv} is too short for {m} quantile guesses"
        )));
    }
    Ok((1..=m).map(|j| iv.lo() + j * iv.len() / (m + 1)).collect())
}

/// Shared machinery: prefix statistics for the fits and raw rows for the
/// residual scans.
struct TwoStepCore<'a> {
    x: &'a Design,
    y: &'a [f64],
    family: LassoFamily,
    fits: AtomicU64,
    evals: AtomicU64,
}

impl<'a> TwoStepCore<'a> {
    fn new(data: &'a SeriesData, stats: Arc<PrefixStats>, lambda_base: f64, cd: CdSettings) -> Result<Self> {
        let (x, y) = data.as_regression()?;
        if stats.n() != y.len() || stats.p() != x.p() {
            return Err(Error::invalid("prefix statistics do not match the data"));
        }
        Ok(Self {
            x,
            y,
            family: LassoFamily::with_stats(stats, lambda_base, cd)?,
            fits: AtomicU64::new(0),
            evals: AtomicU64::new(0),
        })
    }

    fn fit(&self, iv: Interval) -> LassoModel {
        self.fits.fetch_add(1, Ordering::Relaxed);
        self.family.fit(iv)
    }

    fn residual(&self, model: &LassoModel, i: usize) -> f64 {
        let row = self.x.row(i);
        let fit: f64 = model.support().iter().map(|&j| row[j] * model.beta[j]).sum();
        (self.y[i] - fit).powi(2)
    }

    /// Best rescanned split for one guess, over `tau in [lo + d, hi - d]`.
    fn scan(&self, iv: Interval, guess: usize, d: usize) -> (usize, f64) {
        let left = self.fit(Interval::raw(iv.lo(), guess));
        let right = self.fit(Interval::raw(guess, iv.hi()));
        self.evals.fetch_add(2, Ordering::Relaxed);
        // diff[t] = sum_{i < t} (r_left - r_right), relative to iv.lo()
        let len = iv.len();
        let mut diff = Vec::with_capacity(len + 1);
        diff.push(0.0);
        let mut right_total = 0.0;
        let mut acc = 0.0;
        for i in iv.range() {
            let rl = self.residual(&left, i);
            let rr = self.residual(&right, i);
            acc += rl - rr;
            right_total += rr;
            diff.push(acc);
        }
        let mut best = (iv.lo() + d, f64::INFINITY);
        for tau in (iv.lo() + d)..=(iv.hi() - d) {
            let v = diff[tau - iv.lo()];
            if v < best.1 {
                best = (tau, v);
            }
        }
        (best.0, best.1 + right_total)
    }

    fn best_over(&self, iv: Interval, guesses: &[usize], d: usize) -> Result<TwoStepResult> {
        if guesses.is_empty() {
            return Err(Error::invalid("at least one guess is required"));
        }
        let mut best: Option<TwoStepResult> = None;
        for &g in guesses {
            if g <= iv.lo() || g >= iv.hi() {
                return Err(Error::invalid(format!("guess {g} lies outside {iv}")));
            }
            let (tau, total_loss) = self.scan(iv, g, d);
            if best.is_none_or(|b| total_loss < b.total_loss) {
                best = Some(TwoStepResult {
                    tau,
                    total_loss,
                    guess: g,
                });
            }
        }
        Ok(best.expect("non-empty guesses"))
    }

    fn counters(&self) -> Counters {
        Counters {
            fits: self.fits.load(Ordering::Relaxed),
            evals: self.evals.load(Ordering::Relaxed),
        }
    }
}

fn guesses_for(guesses: &Guesses, iv: Interval) -> Result<Vec<usize>> {
    match guesses {
        Guesses::Fixed(g) => Ok(g.clone()),
        Guesses::Quantiles(m) => quantile_guesses(iv, *m),
    }
}

/// Single-changepoint two-step estimate on the whole series. The split with
/// the smallest total loss across guesses wins; ties go to the earlier guess
/// and, within a guess, to the smallest `tau`.
pub fn twostep_single(data: &SeriesData, cfg: &TwoStepConfig) -> Result<TwoStepResult> {
    let n = data.len();
    let d = cfg.delta_m.max(1);
    if n < 2 * d {
        return Err(Error::Infeasible(format!(
            "n = {n} cannot hold two segments of length {d}"
        )));
    }
    let full = Interval::raw(0, n);
    let guesses = guesses_for(&cfg.guesses, full)?;
    for &g in &guesses {
        if g <= cfg.delta_m || g >= n - cfg.delta_m {
            return Err(Error::invalid(format!(
                "guess {g} must lie strictly inside ({}, {})",
                cfg.delta_m,
                n - cfg.delta_m
            )));
        }
    }
    let stats = Arc::new(PrefixStats::new(data)?);
    TwoStepCore::new(data, stats, cfg.lambda_base, cfg.cd)?.best_over(full, &guesses, d)
}

/// Two-step split finder for the greedy splitters.
///
/// `gain = loss of one fit on (s, e] - two-step total loss`, where the single
/// fit is penalised like every other fit on an interval of that length.
pub struct TwoStepSplits<'a> {
    core: TwoStepCore<'a>,
    m: usize,
    delta_m: usize,
}

impl<'a> TwoStepSplits<'a> {
    pub fn new(
        data: &'a SeriesData,
        stats: Arc<PrefixStats>,
        m: usize,
        lambda_base: f64,
        delta_m: usize,
        cd: CdSettings,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("at least one guess is required"));
        }
        if delta_m == 0 {
            return Err(Error::invalid("delta_m must be at least 1"));
        }
        Ok(Self {
            core: TwoStepCore::new(data, stats, lambda_base, cd)?,
            m,
            delta_m,
        })
    }
}

impl SplitFinder for TwoStepSplits<'_> {
    fn n(&self) -> usize {
        self.core.y.len()
    }

    fn delta_m(&self) -> usize {
        self.delta_m
    }

    fn best_split(&self, seg: Interval) -> Result<Option<Split>> {
        if seg.len() < 2 * self.delta_m || seg.len() <= self.m + 1 {
            return Ok(None);
        }
        let guesses = quantile_guesses(seg, self.m)?;
        let best = self.core.best_over(seg, &guesses, self.delta_m)?;
        let whole = self.segment_cost(seg)?;
        Ok(Some(Split {
            tau: best.tau,
            gain: whole - best.total_loss,
        }))
    }

    fn segment_cost(&self, seg: Interval) -> Result<f64> {
        let model = self.core.fit(seg);
        self.core.evals.fetch_add(1, Ordering::Relaxed);
        Ok(self.core.family.loss(&model, seg))
    }

    fn counters(&self) -> Counters {
        self.core.counters()
    }
}
