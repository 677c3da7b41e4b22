// SPDX-License-Identifier: MIT OR Apache-2.0

//! Exact dynamic programmes: segment neighbourhood, optimal partitioning and
//! PELT.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::oracle::SegmentCostOracle;
use crate::search::{Diagnostics, SearchConfig, Segmentation};

/// Lazily filled `(s, t] -> cost` table so every interval is queried once.
struct CostTable<'a, O: ?Sized> {
    oracle: &'a O,
    n: usize,
    values: Vec<f64>,
}

impl<'a, O: SegmentCostOracle + ?Sized> CostTable<'a, O> {
    fn new(oracle: &'a O, n: usize) -> Self {
        Self {
            oracle,
            n,
            values: vec![f64::NAN; (n + 1) * (n + 1)],
        }
    }

    fn get(&mut self, s: usize, t: usize) -> Result<f64> {
        let slot = &mut self.values[s * (self.n + 1) + t];
        if slot.is_nan() {
            *slot = self.oracle.cost(Interval::raw(s, t))?;
        }
        Ok(*slot)
    }
}

/// Segment neighbourhood: for each `K = 0..=k_max`, the changepoints that
/// minimise the summed segment cost over all `K`-changepoint configurations
/// with spacing at least `delta_m`. Ties go to the smallest last changepoint.
pub fn sn_search<O: SegmentCostOracle + ?Sized>(
    oracle: &O,
    k_max: usize,
    cfg: &SearchConfig,
) -> Result<Vec<Segmentation>> {
    let n = oracle.n();
    cfg.validate(n, oracle.min_len())?;
    let delta = cfg.delta_m;
    if n < (k_max + 1) * delta {
        return Err(Error::Infeasible(format!(
            "n = {n} cannot hold {} segments of length {delta}",
            k_max + 1
        )));
    }
    let start = Instant::now();
    let before = oracle.counters();
    let mut table = CostTable::new(oracle, n);

    // best[k][t]: optimal cost of (0, t] with k changepoints; arg = last cp.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k_max + 1];
    let mut arg = vec![vec![0usize; n + 1]; k_max + 1];
    // right ends that can close a prefix with k changepoints
    let ends = |k: usize| (k + 1) * delta..=n;
    for t in ends(0) {
        best[0][t] = table.get(0, t)?;
    }
    for k in 1..=k_max {
        let (prev_rows, rest) = best.split_at_mut(k);
        let prev = &prev_rows[k - 1];
        let row = &mut rest[0];
        for t in ends(k) {
            let mut best_v = f64::INFINITY;
            let mut best_s = 0;
            for s in (k * delta)..=(t - delta) {
                if !prev[s].is_finite() {
                    continue;
                }
                let v = prev[s] + table.get(s, t)?;
                if v < best_v {
                    best_v = v;
                    best_s = s;
                }
            }
            row[t] = best_v;
            arg[k][t] = best_s;
        }
    }
    let counters = oracle.counters().since(before);
    let diagnostics = Diagnostics::new(counters, start.elapsed());

    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut cps = Vec::with_capacity(k);
        let mut t = n;
        for level in (1..=k).rev() {
            t = arg[level][t];
            cps.push(t);
        }
        cps.reverse();
        let mut per_segment = Vec::with_capacity(k + 1);
        let mut prev = 0;
        for &end in cps.iter().chain(std::iter::once(&n)) {
            per_segment.push(table.get(prev, end)?);
            prev = end;
        }
        let total = best[k][n];
        out.push(Segmentation {
            changepoints: cps,
            total_cost: total,
            objective: total,
            per_segment_costs: per_segment,
            diagnostics,
        });
    }
    Ok(out)
}

/// Optimal partitioning: exact minimiser of `sum of segment costs + gamma K`.
///
/// Implemented as [`pelt_search`] with pruning switched off, so the two
/// share one code path.
pub fn op_search<O: SegmentCostOracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Result<Segmentation> {
    penalised(oracle, cfg, false)
}

/// PELT. A candidate `s` is dropped once
/// `F(s) + cost((s, t]) + prune_margin >= F(t)`; the drop takes effect
/// `delta_m` steps later, when `t` itself becomes an admissible last
/// changepoint. Exact when the cost satisfies
/// `cost((s, T]) >= cost((s, t]) + cost((t, T])`, which holds for models
/// fitted on the evaluated interval but not in general for relief models.
pub fn pelt_search<O: SegmentCostOracle + ?Sized>(oracle: &O, cfg: &SearchConfig) -> Result<Segmentation> {
    penalised(oracle, cfg, cfg.pruning)
}

fn penalised<O: SegmentCostOracle + ?Sized>(
    oracle: &O,
    cfg: &SearchConfig,
    pruning: bool,
) -> Result<Segmentation> {
    let n = oracle.n();
    cfg.validate(n, oracle.min_len())?;
    let delta = cfg.delta_m;
    let gamma = cfg.gamma;
    let start = Instant::now();
    let before = oracle.counters();

    let mut f = vec![f64::INFINITY; n + 1];
    let mut n_cps = vec![0usize; n + 1];
    let mut last = vec![0usize; n + 1];
    let mut last_cost = vec![0.0; n + 1];
    f[0] = -gamma;

    let mut candidates: Vec<usize> = Vec::new();
    let mut expiry = vec![usize::MAX; n + 1];
    let mut costs: Vec<f64> = Vec::new();

    for t in delta..=n {
        let fresh = t - delta;
        if fresh == 0 || fresh >= delta {
            candidates.push(fresh);
        }
        if pruning {
            candidates.retain(|&s| expiry[s] > t);
        }
        costs.clear();
        let mut best_v = f64::INFINITY;
        let mut best_k = usize::MAX;
        let mut best_s = 0;
        let mut best_c = 0.0;
        for &s in &candidates {
            let c = oracle.cost(Interval::raw(s, t))?;
            costs.push(c);
            let v = f[s] + c + gamma;
            let k = if s == 0 { 0 } else { n_cps[s] + 1 };
            if v < best_v || (v == best_v && k < best_k) {
                best_v = v;
                best_k = k;
                best_s = s;
                best_c = c;
            }
        }
        f[t] = best_v;
        n_cps[t] = best_k;
        last[t] = best_s;
        last_cost[t] = best_c;
        if pruning {
            for (&s, &c) in candidates.iter().zip(&costs) {
                if f[s] + c + cfg.prune_margin >= f[t] {
                    expiry[s] = expiry[s].min(t + delta);
                }
            }
        }
    }

    let mut cps = Vec::new();
    let mut per_segment = Vec::new();
    let mut t = n;
    while t > 0 {
        per_segment.push(last_cost[t]);
        t = last[t];
        if t > 0 {
            cps.push(t);
        }
    }
    cps.reverse();
    per_segment.reverse();
    let total: f64 = per_segment.iter().sum();
    let counters = oracle.counters().since(before);
    Ok(Segmentation {
        changepoints: cps,
        total_cost: total,
        objective: f[n],
        per_segment_costs: per_segment,
        diagnostics: Diagnostics::new(counters, start.elapsed()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SeriesData;
    use crate::models::MeanFamily;
    use crate::oracle::DirectOracle;
    use crate::search::respects_spacing;
    use rand::{Rng, SeedableRng};

    /// Every changepoint set on `(0, n]` with spacing `delta`.
    fn all_partitions(n: usize, delta: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, n: usize, delta: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if n - start >= delta {
                out.push(cur.clone());
            }
            let mut t = start + delta;
            while t + delta <= n {
                cur.push(t);
                rec(t, n, delta, cur, out);
                cur.pop();
                t += 1;
            }
        }
        let mut out = Vec::new();
        rec(0, n, delta, &mut Vec::new(), &mut out);
        out
    }

    fn naive_cost(z: &[f64], cps: &[usize]) -> f64 {
        let mut total = 0.0;
        let mut prev = 0;
        for &end in cps.iter().chain(std::iter::once(&z.len())) {
            let seg = &z[prev..end];
            let mu = seg.iter().sum::<f64>() / seg.len() as f64;
            total += seg.iter().map(|v| (v - mu).powi(2)).sum::<f64>();
            prev = end;
        }
        total
    }

    fn oracle(z: &[f64], delta: usize) -> DirectOracle<MeanFamily> {
        let data = SeriesData::univariate(z.to_vec()).unwrap();
        DirectOracle::new(MeanFamily::new(&data).unwrap(), delta).unwrap()
    }

    #[test]
    fn step_is_found() {
        let mut z = vec![0.0; 10];
        z.extend(vec![5.0; 10]);
        let o = oracle(&z, 2);
        let cfg = SearchConfig::with_delta_m(2);
        let res = sn_search(&o, 1, &cfg).unwrap();
        assert_eq!(res[0].changepoints, Vec::<usize>::new());
        assert!((res[0].total_cost - naive_cost(&z, &[])).abs() < 1e-9);
        assert_eq!(res[1].changepoints, vec![10]);
        assert!(res[1].total_cost.abs() < 1e-9);
    }

    #[test]
    fn sn_and_op_match_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..15 {
            let n = rng.random_range(12..=26);
            let delta = rng.random_range(2..=4);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let o = oracle(&z, delta);
            let parts = all_partitions(n, delta);
            let k_max = 3.min(n / delta - 1);
            let mut cfg = SearchConfig::with_delta_m(delta);
            let sn = sn_search(&o, k_max, &cfg).unwrap();
            for (k, seg) in sn.iter().enumerate() {
                let best = parts
                    .iter()
                    .filter(|p| p.len() == k)
                    .map(|p| naive_cost(&z, p))
                    .fold(f64::INFINITY, f64::min);
                assert!((seg.total_cost - best).abs() < 1e-9);
                assert!((naive_cost(&z, &seg.changepoints) - best).abs() < 1e-9);
                assert!(respects_spacing(&seg.changepoints, n, delta));
            }
            cfg.gamma = rng.random_range(0.1..3.0);
            let op = op_search(&o, &cfg).unwrap();
            let best = parts
                .iter()
                .map(|p| naive_cost(&z, p) + cfg.gamma * p.len() as f64)
                .fold(f64::INFINITY, f64::min);
            assert!((op.objective - best).abs() < 1e-9);
            assert!(respects_spacing(&op.changepoints, n, delta));
        }
    }

    #[test]
    fn huge_penalty_gives_no_changepoints() {
        let z: Vec<f64> = (0..40).map(|i| (i % 7) as f64).collect();
        let o = oracle(&z, 1);
        let mut cfg = SearchConfig::with_delta_m(1);
        cfg.gamma = 1e6;
        let res = op_search(&o, &cfg).unwrap();
        assert!(res.changepoints.is_empty());
        assert!((res.objective - naive_cost(&z, &[])).abs() < 1e-9);
    }

    #[test]
    fn zero_penalty_fragments_fully() {
        let z = [0.3, -1.0, 2.5, 0.0, 7.0, 1.0];
        let o = oracle(&z, 1);
        let cfg = SearchConfig::with_delta_m(1);
        let res = op_search(&o, &cfg).unwrap();
        assert!(res.total_cost.abs() < 1e-12);
        assert!(res.per_segment_costs.iter().all(|c| c.abs() < 1e-12));
        // fewest changepoints among zero-cost partitions: every point differs
        assert_eq!(res.changepoints, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn pelt_without_pruning_is_op() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let z: Vec<f64> = (0..80).map(|i| rng.random_range(0.0..1.0) + (i / 20) as f64).collect();
        let o = oracle(&z, 3);
        let mut cfg = SearchConfig::with_delta_m(3);
        cfg.gamma = 2.0;
        cfg.pruning = false;
        let mut a = op_search(&o, &cfg).unwrap();
        let mut b = pelt_search(&o, &cfg).unwrap();
        a.diagnostics.wall_time = Default::default();
        b.diagnostics.wall_time = Default::default();
        assert_eq!(a, b);
    }

    #[test]
    fn pelt_prunes_and_agrees() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let z: Vec<f64> = (0..300)
            .map(|i| rng.random_range(-1.0..1.0) + if (i / 60) % 2 == 0 { 0.0 } else { 3.0 })
            .collect();
        let o = oracle(&z, 5);
        let mut cfg = SearchConfig::with_delta_m(5);
        cfg.gamma = 5.0;
        let op = op_search(&o, &cfg).unwrap();
        let pelt = pelt_search(&o, &cfg).unwrap();
        assert_eq!(op.changepoints, pelt.changepoints);
        assert!(pelt.diagnostics.evals < op.diagnostics.evals / 2);
    }

    #[test]
    fn infeasible_requests() {
        let z = vec![0.0; 10];
        let o = oracle(&z, 2);
        assert!(matches!(
            sn_search(&o, 3, &SearchConfig::with_delta_m(3)),
            Err(Error::Infeasible(_))
        ));
        assert!(op_search(&o, &SearchConfig::with_delta_m(11)).is_err());
        assert!(op_search(&o, &SearchConfig::with_delta_m(1)).is_err());
    }
}
