// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

//! `reliever` command-line tool.
//!
//! Exit codes: 0 success, 2 usage or invalid input, 3 runtime failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use reliever::metrics::{BenchConfig, BenchRecord, best_lambda, run_benchmark, summarize};
use reliever::models::{CdSettings, LassoFamily, MeanFamily, ModelFamily, NmcdFamily};
use reliever::search::{
    bs_search, op_search, pelt_search, seedbs_search, sn_search, wbs_search,
};
use reliever::simdata::{ScenarioKind, generate};
use reliever::{
    DirectOracle, Error, RelieverOracle, ReliefPool, SearchConfig, SegmentCostOracle, Segmentation,
    SeriesData, Stopping,
};

#[derive(Parser)]
#[command(name = "reliever", version, about = "Changepoint detection with relief-interval model fits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the relief interval pool.
    Intervals(IntervalsArgs),
    /// Detect changepoints in a CSV dataset.
    Detect(DetectArgs),
    /// Generate a simulated dataset and its truth sidecar.
    Simulate(SimulateArgs),
    /// Run a replication benchmark from a TOML config.
    Bench(BenchArgs),
    /// Aggregate benchmark records to per-method mean/se/median rows.
    Summary(SummaryArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Csv,
    Json,
    /// Only the number of intervals.
    Count,
}

#[derive(Args)]
struct IntervalsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta_m: usize,
    /// Coverage parameter; sets 1 + w = b = r^(-1/2).
    #[arg(long, conflicts_with_all = ["w", "b"], required_unless_present_all = ["w", "b"])]
    r: Option<f64>,
    #[arg(long, requires = "b")]
    w: Option<f64>,
    #[arg(long, requires = "w")]
    b: Option<f64>,
    #[arg(long, value_enum, default_value = "csv")]
    emit: Emit,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Mean,
    Lasso,
    Nmcd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum AlgorithmArg {
    Sn,
    Op,
    Pelt,
    Bs,
    Wbs,
    Seedbs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OracleArg {
    Direct,
    Reliever,
}

#[derive(Args)]
struct DetectArgs {
    /// CSV with header `index,z` or `index,y,x_1,...,x_p`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "mean")]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "sn")]
    algorithm: AlgorithmArg,
    #[arg(long, value_enum, default_value = "direct")]
    oracle: OracleArg,
    /// Coverage parameter of the relief pool.
    #[arg(long, default_value_t = 0.9)]
    r: f64,
    #[arg(long)]
    delta_m: usize,
    /// Number of changepoints (sn, and the greedy splitters).
    #[arg(long)]
    k: Option<usize>,
    /// Penalty per changepoint (op, pelt).
    #[arg(long)]
    gamma: Option<f64>,
    /// Minimum split gain (greedy splitters without --k).
    #[arg(long)]
    threshold: Option<f64>,
    /// LASSO penalty base; the penalty on I is lambda * sqrt(|I|).
    #[arg(long)]
    lambda: Option<f64>,
    /// NMCD grid size; defaults to ceil(4 ln n).
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 100)]
    wild_intervals: usize,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    decay: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disable PELT pruning.
    #[arg(long)]
    no_pruning: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// hd_linear, nonparam or single_cp.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset CSV path.
    #[arg(long)]
    output: PathBuf,
    /// Truth sidecar path; defaults to the output path with a `.json` extension.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Raw records CSV.
    #[arg(long)]
    output: PathBuf,
    /// Summary CSV; printed to stdout when absent.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct SummaryArgs {
    /// Records CSV written by `bench`.
    #[arg(long)]
    input: PathBuf,
    /// Summarise the rows as given instead of the best penalty per run.
    #[arg(long)]
    all_lambdas: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) | Error::Infeasible(_) => Self::usage(e.to_string()),
            _ => Self::runtime(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Intervals(a) => cmd_intervals(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Summary(a) => cmd_summary(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn write_stdout(f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> CmdResult {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    f(&mut out)
        .and_then(|()| out.flush())
        .map_err(|e| Failure::runtime(format!("cannot write output: {e}")))
}

#[derive(Serialize)]
struct LayerJson {
    layer: usize,
    length: f64,
    shift: f64,
    /// `[k, lo, hi]` triples.
    intervals: Vec<[usize; 3]>,
}

#[derive(Serialize)]
struct PoolJson {
    n: usize,
    delta_m: usize,
    w: f64,
    b: f64,
    count: usize,
    layers: Vec<LayerJson>,
}

fn cmd_intervals(a: IntervalsArgs) -> CmdResult {
    let pool = match (a.r, a.w, a.b) {
        (Some(r), _, _) => ReliefPool::from_coverage(a.n, a.delta_m, r)?,
        (None, Some(w), Some(b)) => ReliefPool::build(a.n, a.delta_m, w, b)?,
        _ => return Err(Failure::usage("give either --r or both --w and --b")),
    };
    match a.emit {
        Emit::Count => write_stdout(|out| writeln!(out, "{}", pool.len())),
        Emit::Csv => {
            let mut rows = Vec::new();
            for layer in pool.layers() {
                for (iv, q) in layer.intervals.iter().zip(&layer.positions) {
                    rows.push([layer.index, *q, iv.lo(), iv.hi()]);
                }
            }
            write_stdout(|out| {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(["layer", "k", "lo", "hi"])?;
                for row in rows {
                    w.serialize(row)?;
                }
                w.flush()
            })
        }
        Emit::Json => {
            let doc = PoolJson {
                n: pool.n(),
                delta_m: pool.delta_m(),
                w: pool.wriggle(),
                b: pool.growth(),
                count: pool.len(),
                layers: pool
                    .layers()
                    .iter()
                    .map(|l| LayerJson {
                        layer: l.index,
                        length: l.length,
                        shift: l.shift,
                        intervals: l
                            .intervals
                            .iter()
                            .zip(&l.positions)
                            .map(|(iv, q)| [*q, iv.lo(), iv.hi()])
                            .collect(),
                    })
                    .collect(),
            };
            write_stdout(|out| {
                serde_json::to_writer_pretty(&mut *out, &doc)?;
                writeln!(out)
            })
        }
    }
}

#[derive(Serialize)]
struct DetectJson {
    schema: u32,
    changepoints: Vec<usize>,
    total_cost: f64,
    objective: f64,
    fits: u64,
    evals: u64,
    time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pool_size: Option<usize>,
}

fn read_data(path: &Path) -> Result<SeriesData, Failure> {
    let file = File::open(path).map_err(|e| io_failure(path, e))?;
    SeriesData::read_csv(BufReader::new(file)).map_err(|e| match e {
        Error::Io(_) | Error::Csv(_) => io_failure(path, e),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn run_search<O: SegmentCostOracle>(o: &O, a: &DetectArgs, cfg: &SearchConfig) -> Result<Segmentation, Failure> {
    Ok(match a.algorithm {
        AlgorithmArg::Sn => {
            let k = a.k.ok_or_else(|| Failure::usage("--algorithm sn needs --k"))?;
            sn_search(o, k, cfg)?.pop().expect("k_max + 1 results")
        }
        AlgorithmArg::Op => op_search(o, cfg)?,
        AlgorithmArg::Pelt => pelt_search(o, cfg)?,
        AlgorithmArg::Bs => bs_search(o, cfg)?,
        AlgorithmArg::Wbs => wbs_search(o, cfg)?,
        AlgorithmArg::Seedbs => seedbs_search(o, cfg)?,
    })
}

fn detect_with<F: ModelFamily>(family: F, a: &DetectArgs, cfg: &SearchConfig) -> Result<DetectJson, Failure> {
    let (seg, pool_size) = match a.oracle {
        OracleArg::Direct => {
            let o = DirectOracle::new(family, a.delta_m)?.with_memo();
            (run_search(&o, a, cfg)?, None)
        }
        OracleArg::Reliever => {
            let o = RelieverOracle::from_coverage(family, a.delta_m, a.r)?;
            let size = o.pool().len();
            (run_search(&o, a, cfg)?, Some(size))
        }
    };
    Ok(DetectJson {
        schema: 1,
        total_cost: seg.total_cost,
        objective: seg.objective,
        fits: seg.diagnostics.fits,
        evals: seg.diagnostics.evals,
        time_ms: seg.diagnostics.wall_time.as_secs_f64() * 1e3,
        changepoints: seg.changepoints,
        pool_size,
    })
}

fn cmd_detect(a: DetectArgs) -> CmdResult {
    let data = read_data(&a.input)?;
    let mut cfg = SearchConfig::with_delta_m(a.delta_m);
    cfg.seed = a.seed;
    cfg.wild_intervals = a.wild_intervals;
    cfg.decay = a.decay;
    cfg.pruning = !a.no_pruning;
    match a.algorithm {
        AlgorithmArg::Op | AlgorithmArg::Pelt => {
            cfg.gamma = a.gamma.ok_or_else(|| Failure::usage("op and pelt need --gamma"))?;
        }
        AlgorithmArg::Bs | AlgorithmArg::Wbs | AlgorithmArg::Seedbs => {
            cfg.stopping = match (a.k, a.threshold) {
                (Some(k), None) => Stopping::KnownK(k),
                (None, Some(t)) => Stopping::Threshold(t),
                _ => return Err(Failure::usage("greedy splitters need exactly one of --k and --threshold")),
            };
        }
        AlgorithmArg::Sn => {}
    }
    let result = match a.model {
        ModelArg::Mean => detect_with(MeanFamily::new(&data)?, &a, &cfg)?,
        ModelArg::Lasso => {
            let lambda = a.lambda.ok_or_else(|| Failure::usage("--model lasso needs --lambda"))?;
            detect_with(LassoFamily::new(&data, lambda, CdSettings::default())?, &a, &cfg)?
        }
        ModelArg::Nmcd => {
            let family = match a.grid {
                Some(k) => NmcdFamily::new(&data, reliever::models::make_nmcd_grid(&data, k)?)?,
                None => NmcdFamily::with_default_grid(&data)?,
            };
            detect_with(family, &a, &cfg)?
        }
    };
    write_stdout(|out| {
        serde_json::to_writer(&mut *out, &result)?;
        writeln!(out)
    })
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let kind: ScenarioKind = a.kind.parse()?;
    let (data, scenario) = generate(kind, a.n, a.p, a.seed)?;
    let truth = a.truth.clone().unwrap_or_else(|| a.output.with_extension("json"));
    if truth == a.output {
        return Err(Failure::usage("the truth sidecar would overwrite the dataset"));
    }
    let file = File::create(&a.output).map_err(|e| io_failure(&a.output, e))?;
    data.write_csv(BufWriter::new(file))
        .map_err(|e| io_failure(&a.output, e))?;
    let file = File::create(&truth).map_err(|e| io_failure(&truth, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &scenario)
        .map_err(|e| io_failure(&truth, e))?;
    writeln!(w).and_then(|()| w.flush()).map_err(|e| io_failure(&truth, e))
}

fn load_config(path: &Path) -> Result<BenchConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let parse_error = |e: &dyn std::fmt::Display| Failure::usage(format!("{}: {e}", path.display()));
    let de = toml::Deserializer::parse(&text).map_err(|e| parse_error(&e))?;
    let cfg: BenchConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        parse_error(&format!("at `{at}`: {}", e.into_inner()))
    })?;
    cfg.validate()
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn write_csv_rows<T: Serialize>(out: impl Write, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let cfg = load_config(&a.config)?;
    let records = run_benchmark(&cfg, a.jobs)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the error column", records.len());
    }
    let file = File::create(&a.output).map_err(|e| io_failure(&a.output, e))?;
    write_csv_rows(BufWriter::new(file), &records).map_err(|e| io_failure(&a.output, e))?;
    let summary = summarize(&best_lambda(&records));
    match &a.summary {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_failure(path, e))?;
            write_csv_rows(BufWriter::new(file), &summary).map_err(|e| io_failure(path, e))
        }
        None => write_stdout(|out| write_csv_rows(out, &summary)),
    }
}

fn cmd_summary(a: SummaryArgs) -> CmdResult {
    let file = File::open(&a.input).map_err(|e| io_failure(&a.input, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let records = reader
        .deserialize::<BenchRecord>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::usage(format!("{}: {e}", a.input.display())))?;
    let rows = if a.all_lambdas { records } else { best_lambda(&records) };
    let summary = summarize(&rows);
    write_stdout(|out| write_csv_rows(out, &summary))
}
