// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection error and the replication benchmark.

mod bench;

pub use bench::{
    Algorithm, BenchConfig, BenchRecord, LambdaGrid, MethodSpec, OracleKind, SummaryRow,
    best_lambda, run_benchmark, summarize,
};

/// Hausdorff distance between two changepoint sets on `(0, n]`.
///
/// An empty set is replaced by the boundary `{0, n}` and only the distance
/// from the non-empty set to it is taken, so an empty estimate scores
/// `max_k min(tau_k, n - tau_k)`. Two empty sets are at distance 0.
pub fn hausdorff(est: &[usize], truth: &[usize], n: usize) -> usize {
    let directed = |a: &[usize], b: &[usize]| -> usize {
        a.iter()
            .map(|&x| b.iter().map(|&y| x.abs_diff(y)).min().unwrap_or(0))
            .max()
            .unwrap_or(0)
    };
    match (est.is_empty(), truth.is_empty()) {
        (true, true) => 0,
        (true, false) => directed(truth, &[0, n]),
        (false, true) => directed(est, &[0, n]),
        (false, false) => directed(est, truth).max(directed(truth, est)),
    }
}
