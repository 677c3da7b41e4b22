// SPDX-License-Identifier: MIT OR Apache-2.0

use crate::error::{Error, Result};
use crate::interval::Interval;

/// Deterministic multiscale intervals for seeded binary segmentation.
///
/// Layer `k = 1, ..., ceil(log_{1/a}(n / (2 delta_m))) + 1` holds
/// `2 ceil(a^{-(k-1)}) - 1` evenly spaced intervals of length
/// `max(n a^{k-1}, 2 delta_m)` spanning `(0, n]`. Endpoints are rounded to
/// the nearest integer; duplicates are dropped, keeping the first occurrence.
pub fn seeded_intervals(n: usize, decay: f64, delta_m: usize) -> Result<Vec<Interval>> {
    if !(decay.is_finite() && decay > 0.0 && decay < 1.0) {
        return Err(Error::invalid(format!("decay must lie in (0, 1); got {decay}")));
    }
    if delta_m == 0 || n < 2 * delta_m {
        return Err(Error::invalid(format!(
            "need n >= 2 delta_m; got n = {n}, delta_m = {delta_m}"
        )));
    }
    let nf = n as f64;
    let min_len = (2 * delta_m) as f64;
    let depth = ((nf / min_len).ln() / (1.0 / decay).ln() - 1e-9).ceil().max(0.0) as usize + 1;

    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for k in 1..=depth {
        let scale = decay.powi(k as i32 - 1);
        let len = (nf * scale).max(min_len).min(nf);
        let count = 2 * ((1.0 / scale) - 1e-9).ceil() as usize - 1;
        let shift = if count > 1 { (nf - len) / (count - 1) as f64 } else { 0.0 };
        for i in 0..count {
            let start = i as f64 * shift;
            let lo = start.round() as usize;
            let hi = ((start + len).round() as usize).min(n);
            if lo < hi && seen.insert((lo, hi)) {
                out.push(Interval::raw(lo, hi));
            }
        }
    }
    Ok(out)
}
