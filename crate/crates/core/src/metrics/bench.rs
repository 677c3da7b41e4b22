// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replication benchmark: scenario x methods x penalty grid x replications.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{Guesses, TwoStepConfig, TwoStepSplits, twostep_single};
use crate::data::SeriesData;
use crate::engine::RelieverOracle;
use crate::error::{Error, Result};
use crate::metrics::hausdorff;
use crate::models::{CdSettings, LassoFamily, ModelFamily, NmcdFamily, PrefixStats, lambda_grid};
use crate::oracle::{DirectOracle, SegmentCostOracle};
use crate::search::{
    SearchConfig, Segmentation, Stopping, bs_search, greedy_search, op_search, pelt_search,
    seedbs_search, seeded_intervals, sn_search, wbs_intervals, wbs_search,
};
use crate::simdata::{ScenarioKind, generate};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sn,
    Op,
    Pelt,
    Bs,
    Wbs,
    Seedbs,
    /// Single-changepoint two-step estimate; two-step oracle only.
    Single,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Sn => "sn",
            Self::Op => "op",
            Self::Pelt => "pelt",
            Self::Bs => "bs",
            Self::Wbs => "wbs",
            Self::Seedbs => "seedbs",
            Self::Single => "single",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleKind {
    Direct,
    Reliever { r: f64 },
    Twostep { m: usize },
}

impl OracleKind {
    pub fn label(self) -> String {
        match self {
            Self::Direct => "direct".into(),
            Self::Reliever { r } => format!("reliever({r})"),
            Self::Twostep { m } => format!("twostep({m})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub algorithm: Algorithm,
    pub oracle: OracleKind,
    /// Penalty per changepoint; required by `op` and `pelt`, which do not
    /// use the known number of changepoints.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub wild_intervals: Option<usize>,
    #[serde(default)]
    pub decay: Option<f64>,
}

/// `count` log-spaced values over `[lo, hi] * sqrt(ln p)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: ScenarioKind,
    pub n: usize,
    #[serde(default = "default_p")]
    pub p: usize,
    pub reps: usize,
    /// Replication `i` uses seed `seed + i`.
    #[serde(default)]
    pub seed: u64,
    pub delta_m: usize,
    /// Penalty grid; required for regression scenarios, rejected otherwise.
    #[serde(default)]
    pub lambda: Option<LambdaGrid>,
    #[serde(default)]
    pub cd: CdSettings,
    pub methods: Vec<MethodSpec>,
}

fn default_p() -> usize {
    100
}

impl BenchConfig {
    fn is_regression(&self) -> bool {
        self.scenario != ScenarioKind::Nonparam
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("reps: at least one replication is required"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("methods: at least one method is required"));
        }
        if self.delta_m == 0 || self.n < 2 * self.delta_m {
            return Err(Error::invalid(format!(
                "delta_m: need 1 <= delta_m <= n / 2; got delta_m = {}, n = {}",
                self.delta_m, self.n
            )));
        }
        match (&self.lambda, self.is_regression()) {
            (None, true) => {
                return Err(Error::invalid("lambda: a penalty grid is required for regression scenarios"));
            }
            (Some(_), false) => {
                return Err(Error::invalid("lambda: only regression scenarios take a penalty grid"));
            }
            (Some(g), true) => {
                if g.count == 0 || !(g.lo > 0.0 && g.lo <= g.hi && g.hi.is_finite()) {
                    return Err(Error::invalid("lambda: need 0 < lo <= hi and count >= 1"));
                }
            }
            (None, false) => {}
        }
        for (i, m) in self.methods.iter().enumerate() {
            let at = |msg: &str| Error::invalid(format!("methods[{i}]: {msg}"));
            match (m.oracle, m.algorithm) {
                (OracleKind::Twostep { .. }, _) if !self.is_regression() => {
                    return Err(at("the two-step oracle needs a regression scenario"));
                }
                (OracleKind::Twostep { m: 0 }, _) => return Err(at("twostep needs m >= 1")),
                (OracleKind::Twostep { .. }, Algorithm::Sn | Algorithm::Op | Algorithm::Pelt) => {
                    return Err(at("the two-step oracle only works with single, bs, wbs or seedbs"));
                }
                (OracleKind::Reliever { r }, _) if !(r > 0.0 && r < 1.0) => {
                    return Err(at("reliever r must lie in (0, 1)"));
                }
                (OracleKind::Direct | OracleKind::Reliever { .. }, Algorithm::Single) => {
                    return Err(at("algorithm single needs the two-step oracle"));
                }
                _ => {}
            }
            if matches!(m.algorithm, Algorithm::Op | Algorithm::Pelt)
                && !m.gamma.is_some_and(|g| g >= 0.0)
            {
                return Err(at("op and pelt need gamma >= 0"));
            }
        }
        Ok(())
    }

    /// Penalty values swept per replication; `[None]` without a grid.
    pub fn lambdas(&self) -> Vec<Option<f64>> {
        match &self.lambda {
            Some(g) => lambda_grid(self.p, g.lo, g.hi, g.count).into_iter().map(Some).collect(),
            None => vec![None],
        }
    }
}

/// One detection run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub scenario: String,
    pub algorithm: String,
    pub oracle: String,
    pub lambda: Option<f64>,
    pub hausdorff_error: Option<usize>,
    /// Set when the estimate is empty and the error uses the boundary
    /// convention.
    pub empty_estimate: bool,
    pub k_hat: Option<usize>,
    pub fits: u64,
    pub evals: u64,
    pub wall_time_ms: f64,
    pub seed: u64,
    /// Failure message; empty for successful runs.
    pub error: String,
}

impl BenchRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_empty() && self.hausdorff_error.is_some()
    }

    fn key(&self) -> (&str, &str, &str, u64) {
        (&self.scenario, &self.algorithm, &self.oracle, self.seed)
    }
}

struct Outcome {
    changepoints: Vec<usize>,
    fits: u64,
    evals: u64,
    wall_ms: f64,
}

impl From<Segmentation> for Outcome {
    fn from(s: Segmentation) -> Self {
        Self {
            fits: s.diagnostics.fits,
            evals: s.diagnostics.evals,
            wall_ms: s.diagnostics.wall_time.as_secs_f64() * 1e3,
            changepoints: s.changepoints,
        }
    }
}

fn search_config(cfg: &BenchConfig, method: &MethodSpec, k: usize, seed: u64) -> SearchConfig {
    let mut sc = SearchConfig::with_delta_m(cfg.delta_m);
    sc.stopping = Stopping::KnownK(k);
    sc.gamma = method.gamma.unwrap_or(0.0);
    sc.seed = seed;
    if let Some(m) = method.wild_intervals {
        sc.wild_intervals = m;
    }
    if let Some(a) = method.decay {
        sc.decay = a;
    }
    sc
}

fn run_search<O: SegmentCostOracle>(oracle: &O, algorithm: Algorithm, sc: &SearchConfig, k: usize) -> Result<Outcome> {
    let seg = match algorithm {
        Algorithm::Sn => sn_search(oracle, k, sc)?
            .pop()
            .expect("segment neighbourhood returns k_max + 1 entries"),
        Algorithm::Op => op_search(oracle, sc)?,
        Algorithm::Pelt => pelt_search(oracle, sc)?,
        Algorithm::Bs => bs_search(oracle, sc)?,
        Algorithm::Wbs => wbs_search(oracle, sc)?,
        Algorithm::Seedbs => seedbs_search(oracle, sc)?,
        Algorithm::Single => return Err(Error::invalid("algorithm single needs the two-step oracle")),
    };
    Ok(seg.into())
}

fn run_family<F: ModelFamily>(family: F, method: &MethodSpec, sc: &SearchConfig, k: usize) -> Result<Outcome> {
    let greedy = matches!(method.algorithm, Algorithm::Bs | Algorithm::Wbs | Algorithm::Seedbs);
    match method.oracle {
        OracleKind::Direct => {
            let oracle = DirectOracle::new(family, sc.delta_m)?;
            // DP searches query each interval once; the greedy ones revisit
            let oracle = if greedy { oracle.with_memo() } else { oracle };
            run_search(&oracle, method.algorithm, sc, k)
        }
        OracleKind::Reliever { r } => {
            let oracle = RelieverOracle::from_coverage(family, sc.delta_m, r)?;
            run_search(&oracle, method.algorithm, sc, k)
        }
        OracleKind::Twostep { .. } => Err(Error::invalid("two-step runs need regression data")),
    }
}

fn run_twostep(
    data: &SeriesData,
    stats: &Arc<PrefixStats>,
    cfg: &BenchConfig,
    method: &MethodSpec,
    m: usize,
    lambda: f64,
    sc: &SearchConfig,
) -> Result<Outcome> {
    if method.algorithm == Algorithm::Single {
        let ts = TwoStepConfig {
            guesses: Guesses::Quantiles(m),
            lambda_base: lambda,
            delta_m: cfg.delta_m,
            cd: cfg.cd,
        };
        let start = Instant::now();
        let res = twostep_single(data, &ts)?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        // two fits per guess
        return Ok(Outcome {
            changepoints: vec![res.tau],
            fits: 2 * m as u64,
            evals: 2 * m as u64,
            wall_ms,
        });
    }
    let finder = TwoStepSplits::new(data, Arc::clone(stats), m, lambda, cfg.delta_m, cfg.cd)?;
    let extra = match method.algorithm {
        Algorithm::Bs => Vec::new(),
        Algorithm::Wbs => wbs_intervals(cfg.n, sc.wild_intervals, 2 * cfg.delta_m, sc.seed),
        Algorithm::Seedbs => seeded_intervals(cfg.n, sc.decay, cfg.delta_m)?,
        _ => return Err(Error::invalid("the two-step oracle only works with single, bs, wbs or seedbs")),
    };
    Ok(greedy_search(&finder, &extra, sc.stopping)?.into())
}

fn run_replication(cfg: &BenchConfig, lambdas: &[Option<f64>], rep: usize) -> Vec<BenchRecord> {
    let seed = cfg.seed.wrapping_add(rep as u64);
    let mut out = Vec::new();
    let failed = |method: &MethodSpec, lambda: Option<f64>, e: &Error| BenchRecord {
        scenario: cfg.scenario.name().into(),
        algorithm: method.algorithm.name().into(),
        oracle: method.oracle.label(),
        lambda,
        hausdorff_error: None,
        empty_estimate: false,
        k_hat: None,
        fits: 0,
        evals: 0,
        wall_time_ms: 0.0,
        seed,
        error: e.to_string(),
    };
    let (data, scenario) = match generate(cfg.scenario, cfg.n, cfg.p, seed) {
        Ok(v) => v,
        Err(e) => {
            for method in &cfg.methods {
                for &lambda in lambdas {
                    out.push(failed(method, lambda, &e));
                }
            }
            return out;
        }
    };
    let truth = &scenario.true_changepoints;
    let k = truth.len();
    let stats = if cfg.is_regression() {
        PrefixStats::new(&data).map(Arc::new)
    } else {
        Err(Error::invalid("no regression statistics for univariate data"))
    };
    for method in &cfg.methods {
        let sc = search_config(cfg, method, k, seed);
        for &lambda in lambdas {
            let outcome = match (lambda, &stats, method.oracle) {
                (Some(l), Ok(stats), OracleKind::Twostep { m }) => {
                    run_twostep(&data, stats, cfg, method, m, l, &sc)
                }
                (Some(l), Ok(stats), _) => LassoFamily::with_stats(Arc::clone(stats), l, cfg.cd)
                    .and_then(|f| run_family(f, method, &sc, k)),
                (None, _, _) => {
                    NmcdFamily::with_default_grid(&data).and_then(|f| run_family(f, method, &sc, k))
                }
                (Some(_), Err(e), _) => Err(Error::invalid(e.to_string())),
            };
            out.push(match outcome {
                Ok(o) => BenchRecord {
                    scenario: cfg.scenario.name().into(),
                    algorithm: method.algorithm.name().into(),
                    oracle: method.oracle.label(),
                    lambda,
                    hausdorff_error: Some(hausdorff(&o.changepoints, truth, cfg.n)),
                    empty_estimate: o.changepoints.is_empty() && !truth.is_empty(),
                    k_hat: Some(o.changepoints.len()),
                    fits: o.fits,
                    evals: o.evals,
                    wall_time_ms: o.wall_ms,
                    seed,
                    error: String::new(),
                },
                Err(e) => failed(method, lambda, &e),
            });
        }
    }
    out
}

/// Runs every replication on a pool of `jobs` threads and returns one
/// record per (replication, method, penalty), sorted by scenario, algorithm,
/// oracle, seed and penalty. Failed runs become error rows.
pub fn run_benchmark(cfg: &BenchConfig, jobs: usize) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    let lambdas = cfg.lambdas();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let mut records: Vec<BenchRecord> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .flat_map_iter(|rep| run_replication(cfg, &lambdas, rep))
            .collect()
    });
    records.sort_by(|a, b| {
        a.key()
            .cmp(&b.key())
            .then(a.lambda.unwrap_or(0.0).total_cmp(&b.lambda.unwrap_or(0.0)))
    });
    Ok(records)
}

/// For each (scenario, algorithm, oracle, seed), the successful row with the
/// smallest error; ties go to the smallest penalty. Groups without a
/// successful row keep their first error row.
pub fn best_lambda(records: &[BenchRecord]) -> Vec<BenchRecord> {
    let mut best: BTreeMap<(&str, &str, &str, u64), &BenchRecord> = BTreeMap::new();
    for rec in records {
        let slot = best.entry(rec.key()).or_insert(rec);
        let better = match (rec.is_ok(), slot.is_ok()) {
            (true, false) => true,
            (true, true) => {
                (rec.hausdorff_error, rec.lambda.unwrap_or(0.0))
                    < (slot.hausdorff_error, slot.lambda.unwrap_or(0.0))
            }
            _ => false,
        };
        if better {
            *slot = rec;
        }
    }
    best.into_values().cloned().collect()
}

/// Aggregate over replications.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub algorithm: String,
    pub oracle: String,
    pub runs: usize,
    pub failures: usize,
    pub mean_error: f64,
    pub se_error: f64,
    pub median_error: f64,
    pub mean_time_ms: f64,
    pub se_time_ms: f64,
    pub median_time_ms: f64,
    pub mean_fits: f64,
}

fn mean_se_median(values: &mut [f64]) -> (f64, f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let se = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
    } else {
        0.0
    };
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    let median = if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    };
    (mean, se, median)
}

/// Mean, standard error and median of error and time per
/// (scenario, algorithm, oracle). Feed it [`best_lambda`] rows.
pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str, &str), Vec<&BenchRecord>> = BTreeMap::new();
    for rec in records {
        groups
            .entry((&rec.scenario, &rec.algorithm, &rec.oracle))
            .or_default()
            .push(rec);
    }
    groups
        .into_iter()
        .map(|((scenario, algorithm, oracle), rows)| {
            let ok: Vec<&&BenchRecord> = rows.iter().filter(|r| r.is_ok()).collect();
            let mut errors: Vec<f64> = ok.iter().filter_map(|r| r.hausdorff_error).map(|e| e as f64).collect();
            let mut times: Vec<f64> = ok.iter().map(|r| r.wall_time_ms).collect();
            let (mean_error, se_error, median_error) = mean_se_median(&mut errors);
            let (mean_time_ms, se_time_ms, median_time_ms) = mean_se_median(&mut times);
            let mean_fits = if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| r.fits as f64).sum::<f64>() / ok.len() as f64
            };
            SummaryRow {
                scenario: scenario.into(),
                algorithm: algorithm.into(),
                oracle: oracle.into(),
                runs: ok.len(),
                failures: rows.len() - ok.len(),
                mean_error,
                se_error,
                median_error,
                mean_time_ms,
                se_time_ms,
                median_time_ms,
                mean_fits,
            }
        })
        .collect()
}
