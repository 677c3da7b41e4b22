// SPDX-License-Identifier: MIT OR Apache-2.0

//! Sparse linear regression fitted by cyclic coordinate descent.
//!
//! On an interval `I` the fitted coefficients solve
//!
//! ```text
//! min_beta  sum_{i in I} (y_i - x_i' beta)^2 + lambda_I * ||beta||_1,
//! lambda_I = lambda_base * sqrt(|I|)
//! ```
//!
//! The solver works on the interval's sufficient statistics (Gram matrix,
//! `X'y`, `y'y`) with covariance updates, so a sweep over the coordinates
//! costs `O(p)` plus `O(p)` per coefficient that moves. [`LassoFamily`]
//! keeps prefix sums of those statistics, which makes the statistics of any
//! interval available in `O(p)` per Gram column and the residual sum of
//! squares of a sparse model in `O(s^2)` for `s` non-zero coefficients.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Design, SeriesData};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::models::ModelFamily;

/// Columns with a Gram diagonal below this are treated as identically zero.
const DEGENERATE_COLUMN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdSettings {
    /// Maximum number of coordinate sweeps.
    pub max_iter: usize,
    /// Convergence threshold on the largest coefficient change in a full sweep.
    pub tol: f64,
}

impl Default for CdSettings {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LassoModel {
    pub beta: Vec<f64>,
    /// The penalty actually applied, `lambda_base * sqrt(|I|)`.
    pub lambda_used: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    support: Vec<usize>,
}

impl LassoModel {
    fn from_beta(beta: Vec<f64>, lambda_used: f64, iterations: usize, converged: bool) -> Self {
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            beta,
            lambda_used,
            iterations,
            converged,
            support,
        }
    }

    /// A fixed coefficient vector, e.g. a known truth, usable wherever a
    /// fitted model is.
    pub fn fixed(beta: Vec<f64>) -> Self {
        Self::from_beta(beta, 0.0, 0, true)
    }

    /// Indices of the non-zero coefficients.
    pub fn support(&self) -> &[usize] {
        &self.support
    }
}

/// Read access to the sufficient statistics of one interval.
trait GramView {
    fn p(&self) -> usize;
    fn diag(&self, j: usize) -> f64;
    fn xty(&self, j: usize) -> f64;
    fn column(&self, j: usize, out: &mut [f64]);
}

struct DenseGram {
    p: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
}

impl DenseGram {
    fn from_rows(x: &Design, y: &[f64], iv: Interval) -> Self {
        let p = x.p();
        let mut gram = vec![0.0; p * p];
        let mut xty = vec![0.0; p];
        for i in iv.range() {
            let row = x.row(i);
            for j in 0..p {
                xty[j] += row[j] * y[i];
                let g = &mut gram[j * p..(j + 1) * p];
                for k in 0..p {
                    g[k] += row[j] * row[k];
                }
            }
        }
        Self { p, gram, xty }
    }
}

impl GramView for DenseGram {
    fn p(&self) -> usize {
        self.p
    }

    fn diag(&self, j: usize) -> f64 {
        self.gram[j * self.p + j]
    }

    fn xty(&self, j: usize) -> f64 {
        self.xty[j]
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.gram[j * self.p..(j + 1) * self.p]);
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent with covariance updates and active-set cycling.
///
/// `grad` tracks `X'y - X'X beta`; a full sweep with a maximum change below
/// `tol` ends the run.
fn solve<G: GramView>(g: &G, lambda: f64, cd: CdSettings) -> (Vec<f64>, usize, bool) {
    let p = g.p();
    let half = 0.5 * lambda;
    let diag: Vec<f64> = (0..p).map(|j| g.diag(j)).collect();
    let mut grad: Vec<f64> = (0..p).map(|j| g.xty(j)).collect();
    let mut beta = vec![0.0; p];
    let mut columns: Vec<Option<Box<[f64]>>> = vec![None; p];
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; p];

    let update = |j: usize,
                      beta: &mut [f64],
                      grad: &mut [f64],
                      columns: &mut [Option<Box<[f64]>>]|
     -> f64 {
        let d = diag[j];
        if d <= DEGENERATE_COLUMN {
            return 0.0;
        }
        let z = grad[j] + d * beta[j];
        let fresh = soft_threshold(z, half) / d;
        let delta = fresh - beta[j];
        if delta == 0.0 {
            return 0.0;
        }
        let col = columns[j].get_or_insert_with(|| {
            let mut c = vec![0.0; p].into_boxed_slice();
            g.column(j, &mut c);
            c
        });
        for (gk, ck) in grad.iter_mut().zip(col.iter()) {
            *gk -= delta * ck;
        }
        beta[j] = fresh;
        delta.abs()
    };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < cd.max_iter {
        iterations += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let change = update(j, &mut beta, &mut grad, &mut columns);
            max_change = max_change.max(change);
            if beta[j] != 0.0 && !in_active[j] {
                in_active[j] = true;
                active.push(j);
            }
        }
        if max_change < cd.tol {
            converged = true;
            break;
        }
        while iterations < cd.max_iter {
            iterations += 1;
            let mut max_change = 0.0_f64;
            for &j in &active {
                max_change = max_change.max(update(j, &mut beta, &mut grad, &mut columns));
            }
            if max_change < cd.tol {
                break;
            }
        }
    }
    (beta, iterations, converged)
}

fn lambda_for(lambda_base: f64, iv: Interval) -> f64 {
    lambda_base * (iv.len() as f64).sqrt()
}

fn check_lambda(lambda_base: f64) -> Result<()> {
    if !(lambda_base.is_finite() && lambda_base >= 0.0) {
        return Err(Error::invalid(format!(
            "lambda must be finite and non-negative; got {lambda_base}"
        )));
    }
    Ok(())
}

/// Fits the penalised regression on `iv` directly from the rows of `data`.
pub fn fit_lasso(
    data: &SeriesData,
    iv: Interval,
    lambda_base: f64,
    cd: CdSettings,
) -> Result<LassoModel> {
    check_lambda(lambda_base)?;
    data.check_interval(iv)?;
    let (x, y) = data.as_regression()?;
    let gram = DenseGram::from_rows(x, y, iv);
    let lambda = lambda_for(lambda_base, iv);
    let (beta, iterations, converged) = solve(&gram, lambda, cd);
    Ok(LassoModel::from_beta(beta, lambda, iterations, converged))
}

/// Unpenalised residual sum of squares of `model` over `iv`.
pub fn lasso_loss(model: &LassoModel, data: &SeriesData, iv: Interval) -> Result<f64> {
    data.check_interval(iv)?;
    let (x, y) = data.as_regression()?;
    if model.beta.len() != x.p() {
        return Err(Error::invalid(format!(
            "model has {} coefficients but the design has {} columns",
            model.beta.len(),
            x.p()
        )));
    }
    Ok(iv
        .range()
        .map(|i| {
            let fit: f64 = x.row(i).iter().zip(&model.beta).map(|(a, b)| a * b).sum();
            (y[i] - fit).powi(2)
        })
        .sum())
}

/// Prefix sums of `X'X` (packed upper triangle), `X'y` and `y'y`.
#[derive(Debug)]
pub struct PrefixStats {
    n: usize,
    p: usize,
    tri: usize,
    gram: Vec<f64>,
    xty: Vec<f64>,
    yy: Vec<f64>,
}

impl PrefixStats {
    pub fn new(data: &SeriesData) -> Result<Self> {
        let (x, y) = data.as_regression()?;
        let (n, p) = (x.n(), x.p());
        let tri = p * (p + 1) / 2;
        let mut gram = vec![0.0; (n + 1) * tri];
        let mut xty = vec![0.0; (n + 1) * p];
        let mut yy = vec![0.0; n + 1];
        for i in 0..n {
            let row = x.row(i);
            let (prev, next) = gram.split_at_mut((i + 1) * tri);
            let prev = &prev[i * tri..];
            let next = &mut next[..tri];
            let mut idx = 0;
            for j in 0..p {
                for k in j..p {
                    next[idx] = prev[idx] + row[j] * row[k];
                    idx += 1;
                }
            }
            for j in 0..p {
                xty[(i + 1) * p + j] = xty[i * p + j] + row[j] * y[i];
            }
            yy[i + 1] = yy[i] + y[i] * y[i];
        }
        Ok(Self {
            n,
            p,
            tri,
            gram,
            xty,
            yy,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    fn packed(&self, j: usize, k: usize) -> usize {
        let (a, b) = if j <= k { (j, k) } else { (k, j) };
        a * self.p - a * a.saturating_sub(1) / 2 + (b - a)
    }

    #[inline]
    fn gram_entry(&self, iv: Interval, j: usize, k: usize) -> f64 {
        let idx = self.packed(j, k);
        self.gram[iv.hi() * self.tri + idx] - self.gram[iv.lo() * self.tri + idx]
    }

    #[inline]
    fn xty_entry(&self, iv: Interval, j: usize) -> f64 {
        self.xty[iv.hi() * self.p + j] - self.xty[iv.lo() * self.p + j]
    }

    fn view(&self, iv: Interval) -> PrefixView<'_> {
        PrefixView { stats: self, iv }
    }

    /// `sum_{i in I} (y_i - x_i' beta)^2` for a model with the given support.
    fn rss(&self, model: &LassoModel, iv: Interval) -> f64 {
        let yy = self.yy[iv.hi()] - self.yy[iv.lo()];
        let mut cross = 0.0;
        let mut quad = 0.0;
        let s = model.support();
        for (a, &j) in s.iter().enumerate() {
            let bj = model.beta[j];
            cross += bj * self.xty_entry(iv, j);
            quad += bj * bj * self.gram_entry(iv, j, j);
            for &k in &s[a + 1..] {
                quad += 2.0 * bj * model.beta[k] * self.gram_entry(iv, j, k);
            }
        }
        (yy - 2.0 * cross + quad).max(0.0)
    }
}

struct PrefixView<'a> {
    stats: &'a PrefixStats,
    iv: Interval,
}

impl GramView for PrefixView<'_> {
    fn p(&self) -> usize {
        self.stats.p
    }

    fn diag(&self, j: usize) -> f64 {
        self.stats.gram_entry(self.iv, j, j)
    }

    fn xty(&self, j: usize) -> f64 {
        self.stats.xty_entry(self.iv, j)
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.stats.gram_entry(self.iv, j, k);
        }
    }
}

/// LASSO family over shared prefix statistics.
#[derive(Clone, Debug)]
pub struct LassoFamily {
    stats: Arc<PrefixStats>,
    lambda_base: f64,
    cd: CdSettings,
}

impl LassoFamily {
    pub fn new(data: &SeriesData, lambda_base: f64, cd: CdSettings) -> Result<Self> {
        Self::with_stats(Arc::new(PrefixStats::new(data)?), lambda_base, cd)
    }

    /// Reuses statistics across several penalty levels.
    pub fn with_stats(stats: Arc<PrefixStats>, lambda_base: f64, cd: CdSettings) -> Result<Self> {
        check_lambda(lambda_base)?;
        Ok(Self {
            stats,
            lambda_base,
            cd,
        })
    }

    pub fn lambda_base(&self) -> f64 {
        self.lambda_base
    }

    pub fn stats(&self) -> &Arc<PrefixStats> {
        &self.stats
    }
}

impl ModelFamily for LassoFamily {
    type Model = LassoModel;

    fn n(&self) -> usize {
        self.stats.n
    }

    fn fit(&self, iv: Interval) -> LassoModel {
        let lambda = lambda_for(self.lambda_base, iv);
        let (beta, iterations, converged) = solve(&self.stats.view(iv), lambda, self.cd);
        LassoModel::from_beta(beta, lambda, iterations, converged)
    }

    fn loss(&self, model: &LassoModel, iv: Interval) -> f64 {
        self.stats.rss(model, iv)
    }
}

/// Log-spaced penalty grid of `count` values over `[lo, hi] * sqrt(log p)`.
pub fn lambda_grid(p: usize, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let scale = (p.max(2) as f64).ln().sqrt();
    match count {
        0 => Vec::new(),
        1 => vec![hi * scale],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp() * scale)
                .collect()
        }
    }
}
