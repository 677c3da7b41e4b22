// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

//! Multiple changepoint detection where segment models are fitted only on a
//! small deterministic pool of relief intervals.
//!
//! The pieces fit together as follows:
//!
//! - [`relief`] builds the layered interval pool and answers
//!   "longest pool interval inside `I`" queries.
//! - [`models`] fits per-segment models (mean, LASSO, empirical CDF) and
//!   evaluates the loss of any fitted model on any interval.
//! - [`oracle`] and [`engine`] turn a model family into a segment cost
//!   oracle, either fitting on every queried interval ([`DirectOracle`]) or
//!   on its relief interval ([`RelieverOracle`]).
//! - [`search`] runs the grid-search algorithms (SN, OP, PELT, BS, WBS,
//!   SeedBS) over any oracle.
//! - [`baselines`], [`simdata`] and [`metrics`] cover the two-step
//!   comparator, the simulation designs and the benchmark harness.

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod interval;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod relief;
pub mod search;
pub mod simdata;

pub use data::{Design, SeriesData};
pub use engine::RelieverOracle;
pub use error::{Error, Result};
pub use interval::Interval;
pub use oracle::{Counters, DirectOracle, SegmentCostOracle};
pub use relief::ReliefPool;
pub use search::{SearchConfig, Segmentation, Stopping};
