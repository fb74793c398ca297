//! Command-line front end: solving point files, generating random instances,
//! piece-count statistics and a scaling benchmark.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde_json::json;

use crate::error::{Error, Result};
use crate::explicit_chain::build_chain;
use crate::instance::{build_instance, Instance, PointSet};
use crate::numerics::{Exact, Scalar};
use crate::oracle::{oracle_consecutive, MAX_CONSECUTIVE_POINTS};
use crate::parallel::{map_indexed, Execution};
use crate::solver::{solve, Backend, SolveResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Solve,
    PiecesStats,
    Bench,
    Generate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Arith {
    #[default]
    Float,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum GapDistribution {
    /// Integers uniform in 1..=50.
    #[default]
    SmallUniform,
    /// Integers uniform in 1..=10000.
    LargeUniform,
    /// Normal(100, 30), redrawn until at least 1.
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Largest size of the default benchmark ladder.
pub const BENCH_MAX_N: usize = 3200;

#[derive(Debug, Clone, Parser)]
#[command(name = "dks1d", version, about = "Optimal DKS proximity-graph weights for points on a line")]
pub struct RunConfig {
    #[arg(long, value_enum, default_value_t = Mode::Solve)]
    pub mode: Mode,
    /// Chain representation; `bench` runs both unless one is given.
    #[arg(long)]
    pub backend: Option<Backend>,
    #[arg(long, value_enum, default_value_t = Arith::Float)]
    pub arith: Arith,
    /// Number of points (largest ladder size for `bench`).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: Option<u64>,
    /// Trials for `pieces-stats`, seeds per size for `bench`.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long = "dist", value_enum, default_value_t = GapDistribution::SmallUniform)]
    pub distribution: GapDistribution,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points file: one coordinate per line, `#` comments, `p/q` allowed.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file (`.csv` switches tables to CSV).
    #[arg(long = "out")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Also print every derivative function as `from_x slope intercept` rows.
    #[arg(long)]
    pub dump_plf: bool,
    /// Cross-check the solution against brute force (at most 10 points).
    #[arg(long)]
    pub oracle: bool,
}

impl RunConfig {
    pub fn n_or(&self, default: usize) -> usize {
        self.n.map_or(default, |n| n as usize)
    }

    fn backend_or_default(&self) -> Backend {
        self.backend.unwrap_or_default()
    }
}

/// Reads one coordinate per line. Blank lines and everything after `#` are
/// ignored. Errors carry 1-based line numbers.
pub fn parse_points<S: Scalar>(path: &Path) -> Result<PointSet<S>> {
    let text = fs::read_to_string(path)?;
    parse_points_str(&text)
}

pub fn parse_points_str<S: Scalar>(text: &str) -> Result<PointSet<S>> {
    let mut coords = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value = S::parse(line).ok_or_else(|| Error::Parse {
            line: idx + 1,
            token: line.to_string(),
        })?;
        coords.push(value);
    }
    if coords.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: coords.len(),
        });
    }
    PointSet::new(coords)
}

/// Random generator of trial `trial`: ChaCha8 keyed by the seed, one stream
/// per trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn draw_gaps(dist: GapDistribution, count: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match dist {
        GapDistribution::SmallUniform => (0..count).map(|_| rng.random_range(1..=50) as f64).collect(),
        GapDistribution::LargeUniform => {
            (0..count).map(|_| rng.random_range(1..=10_000) as f64).collect()
        }
        GapDistribution::Gaussian => {
            let normal = Normal::new(100.0, 30.0).expect("valid parameters");
            (0..count)
                .map(|_| loop {
                    let g = normal.sample(rng);
                    if g >= 1.0 {
                        break g;
                    }
                })
                .collect()
        }
    }
}

/// Gaps of trial `trial` converted losslessly to `S`.
pub fn generate_gaps<S: Scalar>(
    dist: GapDistribution,
    n: usize,
    seed: u64,
    trial: u64,
) -> Result<Vec<S>> {
    let mut rng = trial_rng(seed, trial);
    draw_gaps(dist, n.saturating_sub(1), &mut rng)
        .into_iter()
        .map(|g| S::from_f64(g).ok_or_else(|| Error::InvalidArgument(format!("gap {g}"))))
        .collect()
}

pub fn generate_instance<S: Scalar>(cfg: &RunConfig, trial: u64) -> Result<Instance<S>> {
    let n = cfg.n_or(100);
    Instance::from_gaps(generate_gaps(cfg.distribution, n, cfg.seed, trial)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieceStats {
    /// Largest piece count over `R_2 .. R_{n-1}`, one entry per trial.
    pub per_trial: Vec<usize>,
    pub avg: f64,
    pub max: usize,
}

impl PieceStats {
    pub fn from_counts(per_trial: Vec<usize>) -> Self {
        let max = per_trial.iter().copied().max().unwrap_or(0);
        let avg = if per_trial.is_empty() {
            0.0
        } else {
            per_trial.iter().sum::<usize>() as f64 / per_trial.len() as f64
        };
        Self { per_trial, avg, max }
    }
}

pub fn run_pieces_stats(cfg: &RunConfig) -> Result<PieceStats> {
    run_pieces_stats_with(cfg, Execution::default())
}

pub fn run_pieces_stats_with(cfg: &RunConfig, exec: Execution) -> Result<PieceStats> {
    if cfg.n_or(100) < 3 {
        return Err(Error::InvalidArgument("pieces-stats needs n >= 3".into()));
    }
    if cfg.backend.is_some_and(|b| b != Backend::Explicit) {
        return Err(Error::InvalidArgument(
            "pieces-stats counts pieces of the explicit chain".into(),
        ));
    }
    let counts = map_indexed(exec, cfg.trials as usize, |t| match cfg.arith {
        Arith::Float => max_pieces::<f64>(cfg, t as u64),
        Arith::Exact => max_pieces::<Exact>(cfg, t as u64),
    });
    Ok(PieceStats::from_counts(counts.into_iter().collect::<Result<_>>()?))
}

fn max_pieces<S: Scalar>(cfg: &RunConfig, trial: u64) -> Result<usize> {
    Ok(build_chain(&generate_instance::<S>(cfg, trial)?)?.max_pieces())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub backend: Backend,
    pub n: usize,
    /// Mean wall-clock time of one solve over the seeds.
    pub seconds: f64,
    /// Mean 3x3 products per solve (implicit backend only).
    pub matrix_products: u64,
}

/// `100, 200, 400, ...` up to and including `max_n`.
pub fn bench_ladder(max_n: usize) -> Vec<usize> {
    std::iter::successors(Some(100usize), |n| Some(n * 2))
        .take_while(|&n| n <= max_n)
        .collect()
}

pub fn run_bench(cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let backends: Vec<Backend> = match cfg.backend {
        Some(b) => vec![b],
        None => Backend::ALL.to_vec(),
    };
    let ladder = bench_ladder(cfg.n_or(BENCH_MAX_N));
    if ladder.is_empty() {
        return Err(Error::InvalidArgument("bench needs n >= 100".into()));
    }
    let mut rows = Vec::new();
    for &backend in &backends {
        for &n in &ladder {
            let (seconds, products) = match cfg.arith {
                Arith::Float => time_solves::<f64>(cfg, backend, n)?,
                Arith::Exact => time_solves::<Exact>(cfg, backend, n)?,
            };
            rows.push(BenchRow {
                backend,
                n,
                seconds,
                matrix_products: products,
            });
        }
    }
    Ok(rows)
}

fn time_solves<S: Scalar>(cfg: &RunConfig, backend: Backend, n: usize) -> Result<(f64, u64)> {
    let mut total = Duration::ZERO;
    let mut products = 0;
    for trial in 0..cfg.trials {
        let inst = Instance::from_gaps(generate_gaps::<S>(cfg.distribution, n, cfg.seed, trial)?)?;
        let start = Instant::now();
        let res = solve(&inst, backend)?;
        total += start.elapsed();
        if !res.certificate.valid {
            return Err(Error::Invariant(format!(
                "{backend} n={n} trial {trial}: {}",
                res.certificate.summary()
            )));
        }
        products += res.stats.matrix_products;
    }
    Ok((total.as_secs_f64() / cfg.trials as f64, products / cfg.trials))
}

pub fn format_bench(rows: &[BenchRow], csv: bool) -> String {
    let mut out = String::new();
    if csv {
        out.push_str("backend,n,seconds,matrix_products\n");
        for r in rows {
            let _ = writeln!(out, "{},{},{:.6},{}", r.backend, r.n, r.seconds, r.matrix_products);
        }
    } else {
        let _ = writeln!(out, "{:<10} {:>6} {:>12} {:>16}", "backend", "n", "seconds", "matrix_products");
        for r in rows {
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>12.6} {:>16}",
                r.backend, r.n, r.seconds, r.matrix_products
            );
        }
    }
    out
}

pub fn format_pieces_stats(cfg: &RunConfig, stats: &PieceStats, csv: bool) -> String {
    let n = cfg.n_or(100);
    let dist = cfg.distribution.to_possible_value().expect("not skipped");
    if csv {
        format!(
            "n,trials,dist,avg,max\n{n},{},{},{:.3},{}\n",
            cfg.trials,
            dist.get_name(),
            stats.avg,
            stats.max
        )
    } else {
        format!(
            "{:>6} {:>7} {:<14} {:>8} {:>5}\n{n:>6} {:>7} {:<14} {:>8.3} {:>5}\n",
            "n",
            "trials",
            "dist",
            "avg",
            "max",
            cfg.trials,
            dist.get_name(),
            stats.avg,
            stats.max
        )
    }
}

/// Renders a solve result as text lines or a JSON object.
pub fn emit_result<S: Scalar>(res: &SolveResult<S>, fmt: Format) -> String {
    match fmt {
        Format::Text => {
            let mut out = String::new();
            for (i, w) in res.weights.0.iter().enumerate() {
                let _ = writeln!(out, "w[{}] = {w}", i + 1);
            }
            let _ = writeln!(out, "Q = {}", res.q_value);
            let _ = writeln!(out, "{}", res.certificate.summary());
            out
        }
        Format::Json => {
            let c = &res.certificate;
            let value = json!({
                "weights": res.weights.0.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                "q": res.q_value.to_json(),
                "certificate": {
                    "valid": c.valid,
                    "stationarity_residual": c.stationarity_residual.to_json(),
                    "complementarity": c.max_complementarity_violation.to_json(),
                    "min_multiplier": c.min_multiplier.to_json(),
                    "gradient_norm": c.gradient_norm.to_json(),
                    "tolerance": c.tolerance.to_json(),
                    "multipliers": c.multipliers.iter().map(Scalar::to_json).collect::<Vec<_>>(),
                },
                "backend": res.backend.name(),
            });
            format!("{value:#}\n")
        }
    }
}

fn format_points<S: Scalar>(points: &PointSet<S>, cfg: &RunConfig) -> String {
    let dist = cfg.distribution.to_possible_value().expect("not skipped");
    let mut out = format!(
        "# {} points, dist {}, seed {}\n",
        points.len(),
        dist.get_name(),
        cfg.seed
    );
    for p in points.coords() {
        let _ = writeln!(out, "{p}");
    }
    out
}

fn write_output(cfg: &RunConfig, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match &cfg.output {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn wants_csv(cfg: &RunConfig) -> bool {
    cfg.output
        .as_ref()
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_instance<S: Scalar>(cfg: &RunConfig) -> Result<Instance<S>> {
    match &cfg.input {
        Some(path) => build_instance(&parse_points::<S>(path)?),
        None => generate_instance(cfg, 0),
    }
}

/// Outcome of a solve run that completed but must not report success.
#[derive(Debug)]
enum Rejection {
    Certificate,
    OracleMismatch(String),
}

fn run_solve<S: Scalar>(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<Option<Rejection>> {
    let inst = load_instance::<S>(cfg)?;
    let res = solve(&inst, cfg.backend_or_default())?;
    let mut text = emit_result(&res, cfg.format);
    let mut rejection = (!res.certificate.valid).then_some(Rejection::Certificate);
    if cfg.oracle {
        if inst.n() > MAX_CONSECUTIVE_POINTS {
            return Err(Error::OracleScaleExceeded {
                n: inst.n(),
                limit: MAX_CONSECUTIVE_POINTS,
            });
        }
        let oracle = oracle_consecutive(&inst)?;
        let cfg_tol = S::default_tolerance();
        let agree = cfg_tol.approx_eq_scaled(&oracle.q_value, &res.q_value, &oracle.q_value.abs());
        let line = format!(
            "oracle Q = {} ({})",
            oracle.q_value,
            if agree { "agrees" } else { "DISAGREES" }
        );
        if cfg.format == Format::Text {
            let _ = writeln!(text, "{line}");
        }
        if !agree {
            rejection = Some(Rejection::OracleMismatch(line));
        }
    }
    if cfg.dump_plf && inst.n() >= 3 {
        let dump = build_chain(&inst)?.dump();
        match cfg.format {
            Format::Text => text.push_str(&dump),
            Format::Json => eprint!("{dump}"),
        }
    }
    write_output(cfg, &text, stdout)?;
    Ok(rejection)
}

fn run_generate<S: Scalar>(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let gaps = generate_gaps::<S>(cfg.distribution, cfg.n_or(100), cfg.seed, 0)?;
    let points = PointSet::from_gaps(&gaps)?;
    write_output(cfg, &format_points(&points, cfg), stdout)
}

/// Exit code for an error that escaped a run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } | Error::TooFewPoints { .. } | Error::DegenerateGap(_) => EXIT_PARSE,
        Error::Io(_)
        | Error::InvalidArgument(_)
        | Error::OracleScaleExceeded { .. }
        | Error::LengthMismatch { .. } => EXIT_USAGE,
        _ => EXIT_INVARIANT,
    }
}

/// Runs a parsed configuration and returns the process exit code.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = match (cfg.mode, cfg.arith) {
        (Mode::Solve, Arith::Float) => run_solve::<f64>(cfg, stdout),
        (Mode::Solve, Arith::Exact) => run_solve::<Exact>(cfg, stdout),
        (Mode::Generate, Arith::Float) => run_generate::<f64>(cfg, stdout).map(|()| None),
        (Mode::Generate, Arith::Exact) => run_generate::<Exact>(cfg, stdout).map(|()| None),
        (Mode::PiecesStats, _) => run_pieces_stats(cfg).and_then(|stats| {
            let text = format_pieces_stats(cfg, &stats, wants_csv(cfg));
            write_output(cfg, &text, stdout).map(|()| None)
        }),
        (Mode::Bench, _) => run_bench(cfg).and_then(|rows| {
            stdout.write_all(format_bench(&rows, false).as_bytes())?;
            if cfg.output.is_some() {
                let text = format_bench(&rows, wants_csv(cfg));
                write_output(cfg, &text, stdout)?;
            }
            Ok(None)
        }),
    };
    match outcome {
        Ok(None) => EXIT_OK,
        Ok(Some(Rejection::Certificate)) => {
            let _ = writeln!(stderr, "error: optimality certificate is invalid");
            EXIT_INVARIANT
        }
        Ok(Some(Rejection::OracleMismatch(line))) => {
            let _ = writeln!(stderr, "error: {line}");
            EXIT_INVARIANT
        }
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            exit_code(&err)
        }
    }
}

/// Parses `args` (including the program name) and runs them.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match RunConfig::try_parse_from(args) {
        Ok(cfg) => run(&cfg, stdout, stderr),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(text.as_bytes());
                EXIT_OK
            }
        }
    }
}
