// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::interval::Interval;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("infeasible problem: {0}")]
    Infeasible(String),
    /// The relief pool has no interval inside the queried search interval.
    /// Usually means the pool was built for a larger minimum spacing.
    #[error("no relief interval is contained in search interval {0}")]
    NoReliefInterval(Interval),
    #[error("enumeration budget exceeded: {0}")]
    Budget(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
