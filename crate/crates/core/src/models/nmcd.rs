// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nonparametric segment cost built from empirical distribution functions.
//!
//! The integrated log-likelihood is discretised on a grid of quantiles of
//! the whole series. For a model with `m` sorted observations and a target
//! interval `I`, the loss is
//!
//! ```text
//! -|I| * sum_j w_j [ F_I(q_j) log G(q_j) + (1 - F_I(q_j)) log(1 - G(q_j)) ]
//! G(q) = (m * F_model(q) + 0.5) / (m + 1)
//! ```
//!
//! where `F_I` is the empirical CDF of the observations in `I`. When the
//! model was fitted on `I` itself this is the usual per-segment cost; a
//! model from another interval gives the cross-entropy of `I`'s data under
//! that model. The `+0.5` correction keeps `G` away from 0 and 1.

use serde::Serialize;

use crate::data::SeriesData;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::models::ModelFamily;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EcdfModel {
    pub sorted_sample: Vec<f64>,
}

impl EcdfModel {
    pub fn m(&self) -> usize {
        self.sorted_sample.len()
    }

    /// Fraction of the sample at or below `q`.
    pub fn cdf(&self, q: f64) -> f64 {
        self.sorted_sample.partition_point(|&v| v <= q) as f64 / self.m() as f64
    }

    /// Boundary-corrected CDF `(m F(q) + 0.5) / (m + 1)`.
    pub fn corrected_cdf(&self, q: f64) -> f64 {
        let m = self.m() as f64;
        let below = self.sorted_sample.partition_point(|&v| v <= q) as f64;
        (below + 0.5) / (m + 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NmcdGrid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    /// Set when the requested points collapsed onto a single value.
    pub degenerate: bool,
}

impl NmcdGrid {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::invalid(
                "grid needs a non-empty set of points with one weight each",
            ));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("grid weights must be finite and non-negative"));
        }
        Ok(Self {
            points,
            weights,
            degenerate: false,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Default grid size `ceil(4 log n)`, kept within `[1, n - 1]`.
pub fn default_grid_size(n: usize) -> usize {
    let k = (4.0 * (n.max(2) as f64).ln()).ceil() as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

/// Linear-interpolation sample quantile of sorted data.
fn quantile(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lower = h.floor() as usize;
    let upper = (lower + 1).min(sorted.len() - 1);
    sorted[lower] + (h - lower as f64) * (sorted[upper] - sorted[lower])
}

/// Grid of `n_points` quantiles of the whole series at probabilities
/// `(j - 0.5) / n_points`, uniformly weighted. Coinciding points are merged
/// and their weights summed.
pub fn make_nmcd_grid(data: &SeriesData, n_points: usize) -> Result<NmcdGrid> {
    let z = data.as_univariate()?;
    if n_points == 0 || n_points >= z.len() {
        return Err(Error::invalid(format!(
            "grid size must lie in [1, n - 1] = [1, {}]; got {n_points}",
            z.len().saturating_sub(1)
        )));
    }
    let mut sorted = z.to_vec();
    sorted.sort_by(f64::total_cmp);
    let w = 1.0 / n_points as f64;
    let mut points: Vec<f64> = Vec::with_capacity(n_points);
    let mut weights: Vec<f64> = Vec::with_capacity(n_points);
    for j in 1..=n_points {
        let q = quantile(&sorted, (j as f64 - 0.5) / n_points as f64);
        match points.last() {
            Some(&last) if q <= last => *weights.last_mut().unwrap() += w,
            _ => {
                points.push(q);
                weights.push(w);
            }
        }
    }
    let degenerate = n_points > 1 && points.len() == 1;
    Ok(NmcdGrid {
        points,
        weights,
        degenerate,
    })
}

pub fn fit_ecdf(data: &SeriesData, iv: Interval) -> Result<EcdfModel> {
    data.check_interval(iv)?;
    let mut sorted_sample = data.as_univariate()?[iv.range()].to_vec();
    sorted_sample.sort_by(f64::total_cmp);
    Ok(EcdfModel { sorted_sample })
}

fn entropy_term(share_below: f64, corrected: f64) -> f64 {
    let mut t = 0.0;
    if share_below > 0.0 {
        t += share_below * corrected.ln();
    }
    if share_below < 1.0 {
        t += (1.0 - share_below) * (1.0 - corrected).ln();
    }
    t
}

/// Loss of `model` on the observations in `iv`, by direct counting.
pub fn nmcd_loss(model: &EcdfModel, data: &SeriesData, iv: Interval, grid: &NmcdGrid) -> Result<f64> {
    data.check_interval(iv)?;
    let z = &data.as_univariate()?[iv.range()];
    let len = iv.len() as f64;
    let mut total = 0.0;
    for (&q, &w) in grid.points.iter().zip(&grid.weights) {
        if w == 0.0 {
            continue;
        }
        let below = z.iter().filter(|&&v| v <= q).count() as f64 / len;
        total += w * entropy_term(below, model.corrected_cdf(q));
    }
    Ok(-len * total)
}

/// ECDF model with its corrected CDF already evaluated on the grid.
#[derive(Clone, Debug)]
pub struct GridEcdf {
    pub ecdf: EcdfModel,
    corrected: Vec<f64>,
}

/// NMCD family with per-grid-point prefix counts: fitting sorts the
/// interval's data, evaluation costs `O(grid size)`.
#[derive(Clone, Debug)]
pub struct NmcdFamily {
    z: Vec<f64>,
    grid: NmcdGrid,
    /// `counts[j * (n + 1) + i]` = number of the first `i` observations at or
    /// below grid point `j`.
    counts: Vec<u32>,
}

impl NmcdFamily {
    pub fn new(data: &SeriesData, grid: NmcdGrid) -> Result<Self> {
        let z = data.as_univariate()?.to_vec();
        let n = z.len();
        let mut counts = vec![0u32; grid.len() * (n + 1)];
        for (j, &q) in grid.points.iter().enumerate() {
            let row = &mut counts[j * (n + 1)..(j + 1) * (n + 1)];
            for i in 0..n {
                row[i + 1] = row[i] + u32::from(z[i] <= q);
            }
        }
        Ok(Self { z, grid, counts })
    }

    /// Family on the default `ceil(4 log n)`-point grid.
    pub fn with_default_grid(data: &SeriesData) -> Result<Self> {
        let n = data.len();
        let grid = make_nmcd_grid(data, default_grid_size(n))?;
        Self::new(data, grid)
    }

    pub fn grid(&self) -> &NmcdGrid {
        &self.grid
    }
}

impl ModelFamily for NmcdFamily {
    type Model = GridEcdf;

    fn n(&self) -> usize {
        self.z.len()
    }

    fn fit(&self, iv: Interval) -> GridEcdf {
        let mut sorted_sample = self.z[iv.range()].to_vec();
        sorted_sample.sort_by(f64::total_cmp);
        let ecdf = EcdfModel { sorted_sample };
        let corrected = self.grid.points.iter().map(|&q| ecdf.corrected_cdf(q)).collect();
        GridEcdf { ecdf, corrected }
    }

    fn loss(&self, model: &GridEcdf, iv: Interval) -> f64 {
        let stride = self.z.len() + 1;
        let len = iv.len() as f64;
        let mut total = 0.0;
        for (j, (&w, &g)) in self.grid.weights.iter().zip(&model.corrected).enumerate() {
            let row = &self.counts[j * stride..(j + 1) * stride];
            let below = f64::from(row[iv.hi()] - row[iv.lo()]) / len;
            total += w * entropy_term(below, g);
        }
        -len * total
    }
}
