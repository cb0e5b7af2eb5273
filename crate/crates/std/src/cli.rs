//! The `dpswd` command line.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 infeasible privacy
//! budget. Diagnostics go to stderr.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use dpswd_core::accountant::{AccountantConfig, Amplification};
use dpswd_core::flow::{run_flow, DirectionPolicy, FlowConfig, FlowPrivacy};
use dpswd_core::sensitivity::BoundKind;
use dpswd_core::sliced::{dp_swd_with, swd_with, NoiseSides, PrivateMeasure, PrivateSource, SwdConfig};
use dpswd_core::{EmpiricalMeasure, Matrix, Normalization, Seed};
use serde::Serialize;
use serde_json::{json, Value};

use crate::experiments::{self, parse_grid, ToyParams};
use crate::io::{load_measure, save_csv, write_csv, IoError};
use crate::manifest::{with_manifest, RunManifest};
use crate::RayonExecutor;

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "dpswd", version, about = "Differentially private sliced Wasserstein distance")]
struct Cli {
    /// Master seed, decimal or 0x-hex.
    #[arg(long, global = true, default_value = "0", value_parser = parse_seed)]
    seed: Seed,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file (compute, calibrate) or directory (sensitivity, toy, flow).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sliced distance between two CSV point clouds; `--sigma` makes it private.
    Compute(ComputeArgs),
    /// Monte-Carlo law of the squared sensitivity against its bounds.
    Sensitivity(SensitivityArgs),
    /// Distances between N(0, I) and N(c·1, I) along a grid of c.
    Toy(ToyArgs),
    /// Noise level meeting an (eps, delta) budget for a training schedule.
    Calibrate(CalibrateArgs),
    /// Particle flow of the source cloud toward the (private) target.
    Flow(FlowArgs),
}

#[derive(Debug, Args, Serialize)]
struct ComputeArgs {
    /// Public sample.
    #[arg(long)]
    a: PathBuf,
    /// Private sample (receives the mechanism noise).
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 200)]
    k: usize,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long)]
    sigma: Option<f64>,
    /// `max` or `clip:C`, applied to both samples.
    #[arg(long, value_parser = parse_normalize)]
    normalize: Option<String>,
    #[arg(long, default_value = "both", value_parser = ["both", "target"])]
    sides: String,
    /// Skip the first line of each CSV.
    #[arg(long)]
    header: bool,
}

#[derive(Debug, Args, Serialize)]
struct SensitivityArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
}

#[derive(Debug, Args, Serialize)]
struct ToyArgs {
    #[arg(long, default_value_t = 5)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// `start:stop:step`, inclusive.
    #[arg(long, default_value = "0:1:0.1")]
    grid: String,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

#[derive(Debug, Args, Serialize)]
struct CalibrateArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    /// Data dimension.
    #[arg(long)]
    dim: usize,
    /// Projections per step.
    #[arg(long)]
    k: usize,
    /// Dataset size.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1)]
    epochs: u64,
    #[arg(long)]
    batch: u64,
    #[arg(long, default_value = "bernstein", value_parser = ["bernstein", "clt"])]
    bound: String,
    #[arg(long, default_value = "poisson", value_parser = ["poisson", "without-replacement", "wor", "none"])]
    amplification: String,
    /// Share of delta spent on the sensitivity bound.
    #[arg(long, default_value_t = 0.5)]
    delta_split: f64,
}

#[derive(Debug, Args, Serialize)]
struct FlowArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 500)]
    iters: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    /// Mini-batch size (default: full batch, equal sample counts).
    #[arg(long)]
    batch: Option<usize>,
    /// Reuse one set of directions at every step.
    #[arg(long)]
    fixed_directions: bool,
    /// `max` or `clip:C`, applied to both clouds; particles are reported in
    /// the normalized coordinates.
    #[arg(long, value_parser = parse_normalize)]
    normalize: Option<String>,
    #[arg(long, default_value = "both", value_parser = ["both", "target"])]
    sides: String,
    #[arg(long, default_value_t = 1e-5)]
    delta: f64,
    #[arg(long, default_value = "bernstein", value_parser = ["bernstein", "clt"])]
    bound: String,
    #[arg(long, default_value = "poisson", value_parser = ["poisson", "without-replacement", "wor", "none"])]
    amplification: String,
    #[arg(long, default_value_t = 0.5)]
    delta_split: f64,
    #[arg(long, default_value_t = 1)]
    log_every: usize,
    #[arg(long)]
    header: bool,
}

fn parse_seed(s: &str) -> Result<Seed, String> {
    s.parse().map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_normalize(s: &str) -> Result<String, String> {
    to_normalization(s).map(|_| s.to_string())
}

fn to_normalization(s: &str) -> Result<Normalization, String> {
    if s == "max" {
        return Ok(Normalization::MaxNorm);
    }
    match s.strip_prefix("clip:").map(str::parse::<f64>) {
        Some(Ok(c)) if c > 0.0 && c.is_finite() => Ok(Normalization::Clip(c)),
        _ => Err(format!("expected `max` or `clip:C` with C > 0, got {s:?}")),
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Infeasible(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Infeasible(m) => m,
        }
    }
}

impl From<dpswd_core::Error> for Failure {
    fn from(e: dpswd_core::Error) -> Self {
        match e {
            dpswd_core::Error::InvalidParameter { .. } => Failure::Usage(e.to_string()),
            dpswd_core::Error::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Data(e.to_string())
    }
}

fn io_failure(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return if e.exit_code() == 0 { 0 } else { EXIT_USAGE };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let exec = RayonExecutor::new(cli.threads).map_err(|e| Failure::Usage(e.to_string()))?;
    let started = Instant::now();
    let ctx = Ctx {
        exec,
        seed: cli.seed,
        out: cli.out.as_deref(),
        started,
    };
    match &cli.command {
        Command::Compute(a) => compute(&ctx, a, stdout),
        Command::Sensitivity(a) => sensitivity(&ctx, a, stdout, stderr),
        Command::Toy(a) => toy(&ctx, a, stdout),
        Command::Calibrate(a) => calibrate(&ctx, a, stdout, stderr),
        Command::Flow(a) => flow(&ctx, a, stdout),
    }
}

struct Ctx<'a> {
    exec: RayonExecutor,
    seed: Seed,
    out: Option<&'a Path>,
    started: Instant,
}

impl Ctx<'_> {
    fn manifest<P: Serialize>(&self, subcommand: &str, params: &P) -> RunManifest {
        RunManifest::finish(subcommand, params, self.seed.0, self.started)
    }

    fn out_dir(&self, subcommand: &str) -> Result<&Path, Failure> {
        let dir = self
            .out
            .ok_or_else(|| Failure::Usage(format!("{subcommand} needs --out <DIR>")))?;
        fs::create_dir_all(dir).map_err(io_failure(dir))?;
        Ok(dir)
    }

    /// Writes JSON to `--out` when given, else to stdout.
    fn emit_json(&self, v: &Value, stdout: &mut dyn Write) -> Result<(), Failure> {
        match self.out {
            Some(path) => write_json(path, v),
            None => writeln!(stdout, "{}", pretty(v)).map_err(|e| Failure::Data(e.to_string())),
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

fn write_json(path: &Path, v: &Value) -> Result<(), Failure> {
    fs::write(path, pretty(v) + "\n").map_err(io_failure(path))
}

fn sides(s: &str) -> NoiseSides {
    if s == "target" {
        NoiseSides::TargetOnly
    } else {
        NoiseSides::Both
    }
}

fn normalize_pair(
    a: EmpiricalMeasure,
    b: EmpiricalMeasure,
    mode: Option<&str>,
) -> Result<(EmpiricalMeasure, EmpiricalMeasure), Failure> {
    match mode {
        None => Ok((a, b)),
        Some(m) => {
            let mode = to_normalization(m).map_err(Failure::Usage)?;
            Ok((a.normalize_for_privacy(mode)?, b.normalize_for_privacy(mode)?))
        }
    }
}

fn check_private(sigma: f64, normalize: &Option<String>) -> Result<(), Failure> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(Failure::Usage(format!("--sigma must be >= 0, got {sigma}")));
    }
    if sigma > 0.0 && normalize.is_none() {
        return Err(Failure::Usage(
            "--sigma > 0 needs --normalize max|clip:C: the private sample must have row norms <= 1/2".into(),
        ));
    }
    Ok(())
}

fn compute(ctx: &Ctx, a: &ComputeArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let sigma = a.sigma.unwrap_or(0.0);
    check_private(sigma, &a.normalize)?;
    let x = load_measure(&a.a, a.header)?;
    let y = load_measure(&a.b, a.header)?;
    let (x, y) = normalize_pair(x, y, a.normalize.as_deref())?;
    let cfg = SwdConfig::new(a.k, a.q, ctx.seed).with_sides(sides(&a.sides));
    let result = if sigma > 0.0 {
        let private = PrivateMeasure::normalized(y.clone())?;
        dp_swd_with(&ctx.exec, &x, &private, &cfg.with_sigma(sigma))?
    } else {
        swd_with(&ctx.exec, &x, &y, &cfg)?
    };
    let body = json!({
        "value": result.value,
        "distance": result.distance(),
        "k": a.k,
        "q": a.q,
        "sigma": sigma,
        "sides": a.sides,
        "normalize": a.normalize,
        "n_a": x.len(),
        "n_b": y.len(),
        "dim": x.dim(),
        "per_projection": result.per_projection,
    });
    ctx.emit_json(&with_manifest(&body, &ctx.manifest("compute", a)), stdout)
}

fn sensitivity(
    ctx: &Ctx,
    a: &SensitivityArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let dir = ctx.out_dir("sensitivity")?;
    let report = experiments::sensitivity(&ctx.exec, a.d, a.k, a.trials, a.delta, ctx.seed)?;
    for w in &report.summary.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let samples_path = dir.join("sensitivity_samples.csv");
    let mut table = Vec::with_capacity(2 * report.samples.len());
    for (t, h) in report.samples.iter().enumerate() {
        table.extend([t as f64, *h]);
    }
    let table = Matrix::from_row_major(report.samples.len(), 2, table)?;
    save_csv(&samples_path, &table, Some(&["trial", "h"]))?;
    let v = with_manifest(&report.summary, &ctx.manifest("sensitivity", a));
    write_json(&dir.join("sensitivity_summary.json"), &v)?;
    writeln!(stdout, "{}", pretty(&v)).map_err(|e| Failure::Data(e.to_string()))
}

fn toy(ctx: &Ctx, a: &ToyArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    let grid = parse_grid(&a.grid).map_err(Failure::Usage)?;
    let params = ToyParams {
        d: a.d,
        n: a.n,
        k: a.k,
        sigma: a.sigma,
        grid,
        repeats: a.repeats,
        seed: ctx.seed.0,
    };
    let rows = experiments::toy(&ctx.exec, &params)?;
    let table = Matrix::from_rows(
        &rows
            .iter()
            .map(|r| vec![r.c, r.swd_mean, r.swd_std, r.dpswd_mean, r.dpswd_std])
            .collect::<Vec<_>>(),
    )?;
    let header = ["c", "swd_mean", "swd_std", "dpswd_mean", "dpswd_std"];
    match ctx.out {
        None => write_csv(&mut *stdout, &table, Some(&header)).map_err(|e| Failure::Data(e.to_string())),
        Some(_) => {
            let dir = ctx.out_dir("toy")?;
            save_csv(&dir.join("toy.csv"), &table, Some(&header))?;
            let v = with_manifest(&json!({ "rows": rows }), &ctx.manifest("toy", &params));
            write_json(&dir.join("toy.json"), &v)
        }
    }
}

fn calibrate(
    ctx: &Ctx,
    a: &CalibrateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let kind: BoundKind = a.bound.parse()?;
    let amp: Amplification = a.amplification.parse()?;
    let report = experiments::calibrate(
        a.eps,
        a.delta,
        a.dim,
        a.k,
        a.n,
        a.epochs,
        a.batch,
        kind,
        amp,
        a.delta_split,
    )?;
    for w in &report.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    ctx.emit_json(&with_manifest(&report, &ctx.manifest("calibrate", a)), stdout)
}

fn flow(ctx: &Ctx, a: &FlowArgs, stdout: &mut dyn Write) -> Result<(), Failure> {
    check_private(a.sigma, &a.normalize)?;
    let dir = ctx.out_dir("flow")?;
    let source = load_measure(&a.source, a.header)?;
    let target = load_measure(&a.target, a.header)?;
    let (source, target) = normalize_pair(source, target, a.normalize.as_deref())?;

    let mut cfg = FlowConfig::new(a.iters, a.lr, a.k, ctx.seed).with_sigma(a.sigma);
    cfg.noise_sides = sides(&a.sides);
    cfg.batch_size = a.batch;
    cfg.log_every = a.log_every;
    if a.fixed_directions {
        cfg.directions = DirectionPolicy::Fixed;
    }
    cfg.privacy = FlowPrivacy {
        delta: a.delta,
        bound: a.bound.parse()?,
        delta_split: a.delta_split,
        accountant: AccountantConfig {
            amplification: a.amplification.parse()?,
            ..AccountantConfig::default()
        },
    };
    // without noise there is nothing to check; the wrapper only guards σ > 0
    let private = if a.sigma > 0.0 {
        PrivateMeasure::normalized(target)?
    } else {
        PrivateMeasure::new(target)
    };
    let trace = run_flow(&ctx.exec, &source, &private, &cfg)?;

    let trace_table = Matrix::from_rows(
        &trace
            .records
            .iter()
            .map(|r| vec![r.iteration as f64, r.loss, r.grad_norm])
            .collect::<Vec<_>>(),
    )?;
    save_csv(&dir.join("trace.csv"), &trace_table, Some(&["iteration", "loss", "grad_norm"]))?;
    save_csv(&dir.join("particles.csv"), &trace.particles, None)?;

    let privacy = trace.privacy.as_ref().map(|p| {
        json!({
            "eps": p.accounting.eps,
            "delta": p.accounting.delta,
            "best_order": p.accounting.best_order,
            "sensitivity_sq": p.accounting.sensitivity_sq,
            "steps": p.steps,
            "sampling_rate": p.sampling_rate,
        })
    });
    let body = json!({
        "iterations": a.iters,
        "initial_loss": trace.records.first().map(|r| r.loss),
        "final_loss": trace.records.last().map(|r| r.loss),
        "sigma": a.sigma,
        "n_source": source.len(),
        "n_target": private.len(),
        "dim": source.dim(),
        "privacy": privacy,
    });
    let v = with_manifest(&body, &ctx.manifest("flow", a));
    write_json(&dir.join("summary.json"), &v)?;
    writeln!(stdout, "{}", pretty(&v)).map_err(|e| Failure::Data(e.to_string()))
}
