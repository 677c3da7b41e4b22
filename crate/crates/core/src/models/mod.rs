// SPDX-License-Identifier: MIT OR Apache-2.0

//! Segment models: fit on one interval, evaluate the loss on any interval.
//!
//! Each family comes in two forms. Free functions (`fit_mean`,
//! `mean_loss`, ...) work straight from [`SeriesData`](crate::SeriesData)
//! with plain loops. The `*Family` types precompute prefix statistics once
//! so that repeated fits and cross-evaluations on a fixed series are cheap;
//! these are what the cost oracles use.

pub mod lasso;
pub mod mean;
pub mod nmcd;

pub use lasso::{CdSettings, LassoFamily, LassoModel, PrefixStats, fit_lasso, lambda_grid, lasso_loss};
pub use mean::{MeanFamily, MeanModel, fit_mean, mean_loss};
pub use nmcd::{
    EcdfModel, NmcdFamily, NmcdGrid, default_grid_size, fit_ecdf, make_nmcd_grid, nmcd_loss,
};

use crate::interval::Interval;

/// A segment model family bound to one observed series.
///
/// `loss` never refits: the model may come from any interval, which is what
/// lets a relief model stand in for the model of a search interval.
pub trait ModelFamily: Send + Sync {
    type Model: Send + Sync;

    /// Length of the underlying series.
    fn n(&self) -> usize;

    fn fit(&self, iv: Interval) -> Self::Model;

    fn loss(&self, model: &Self::Model, iv: Interval) -> f64;
}

impl<F: ModelFamily> ModelFamily for &F {
    type Model = F::Model;

    fn n(&self) -> usize {
        (**self).n()
    }

    fn fit(&self, iv: Interval) -> Self::Model {
        (**self).fit(iv)
    }

    fn loss(&self, model: &Self::Model, iv: Interval) -> f64 {
        (**self).loss(model, iv)
    }
}
