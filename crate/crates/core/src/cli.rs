//! Command-line frontend.
//!
//! ```text
//! fourier-eigen [--config FILE] [--format csv|json] [--out PATH] [--tol REAL] [--timings] <command>
//!
//!   eval       --fn NAME [--d INT] [--delta REAL] [--alpha REAL] [--t REAL] --grid MIN:MAX:COUNT[:log]
//!   verify     --d INT
//!   transform  --fn NAME --d INT [--alpha REAL] [--a REAL] [--t REAL] [--grid ...] [--compare]
//!   thermal    --t REAL [--grid ...]
//!   report     [--dims MIN:MAX]
//! ```
//!
//! CSV columns:
//!
//! | command    | columns |
//! |------------|---------|
//! | eval       | `x,value` |
//! | transform  | `rho,value` and, with `--compare`, `reference,residual` |
//! | thermal    | `radius,e_th,e_s` (fit summary on stderr) |
//! | verify     | `d,check,relation,residual,tolerance,passed` and, with `--timings`, `runtime_ms` |
//! | report     | as `verify` |
//!
//! Numbers are written with 17 significant digits. JSON documents carry
//! `schema_version = 1`.
//!
//! Settings are layered: flags override the TOML file given by `--config`
//! (keys `format`, `out`, `tol`, `d`, `grid`, `timings`), which overrides
//! built-in defaults.
//!
//! Exit status: 0 success, 1 a check failed, 2 usage error, 3 numerical error.
//! `FOURIER_EIGEN_THREADS` caps the worker threads (0 or unset: automatic).

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigenfunctions::{RadialEigenfunction, RegularizedFunction};
use crate::error::Error;
use crate::expint::{DeltaExpEvaluator, DeltaParam, EvalOptions};
use crate::radial_fourier::{
    g_hat_alpha, gaussian_transform, h_hat_alpha, radial_fourier_grid, FnProfile, GaussianProfile, PhiProfile,
    RadialProfile, RadialTransformPlan, TailHint, MAX_DIMENSION,
};
use crate::thermal_lens::{e_s, e_th, fourier_consistency, FitReport, LensState};
use crate::verify::{verify_dimension, SuiteOptions, VerificationReport, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const THREADS_ENV: &str = "FOURIER_EIGEN_THREADS";

const DEFAULT_COMPARE_TOL: f64 = 1e-6;
const DEFAULT_FIT_TOL: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(name = "fourier-eigen", version, about = "Radial Fourier eigenfunctions: evaluation, transforms and verification")]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Include wall-clock timings in the output.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate a function over a grid.
    Eval(EvalArgs),
    /// Run the verification suite for one dimension.
    Verify(VerifyArgs),
    /// Numerical radial Fourier transform over a grid of spectral radii.
    Transform(TransformArgs),
    /// Thermal-lens profiles and the fit of the transformed exit field.
    Thermal(ThermalArgs),
    /// Run the verification suite over a range of dimensions.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum EvalFn {
    EiDelta,
    GDelta,
    HDelta,
    PhiD,
    #[value(name = "f_d")]
    #[serde(rename = "f_d")]
    FD,
    #[value(name = "f_d_alpha")]
    #[serde(rename = "f_d_alpha")]
    FDAlpha,
    ETh,
    #[value(name = "e_s")]
    #[serde(rename = "e_s")]
    ES,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[value(rename_all = "snake_case")]
#[serde(rename_all = "snake_case")]
enum TransformFn {
    #[value(name = "f_d")]
    #[serde(rename = "f_d")]
    FD,
    PhiD,
    #[value(name = "f_d_alpha")]
    #[serde(rename = "f_d_alpha")]
    FDAlpha,
    Gaussian,
    ETh,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long = "fn", value_enum)]
    function: EvalFn,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    d: Option<u32>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long = "fn", value_enum)]
    function: TransformFn,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Rate of the Gaussian profile `e^{-a r^2}`.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
    /// Add the closed-form reference and the relative residual.
    #[arg(long)]
    compare: bool,
}

#[derive(Debug, Args)]
struct ThermalArgs {
    #[arg(long)]
    t: f64,
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<GridSpec>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Dimension range `MIN:MAX`.
    #[arg(long, default_value = "1:8")]
    dims: DimRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

/// `MIN:MAX:COUNT[:log|:linear]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String")]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| match self.spacing {
                Spacing::Linear => self.min + (self.max - self.min) * i as f64 / n,
                Spacing::Log => self.min * (self.max / self.min).powf(i as f64 / n),
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("grid must be MIN:MAX:COUNT[:log], got '{s}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad grid bound '{p}': {e}"));
        let (min, max) = (num(parts[0])?, num(parts[1])?);
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("bad grid count '{}': {e}", parts[2]))?;
        let spacing = match parts.get(3).map(|p| p.trim()) {
            None | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => return Err(format!("grid spacing must be 'linear' or 'log', got '{other}'")),
        };
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(format!("grid needs finite MIN < MAX, got {min} and {max}"));
        }
        if count == 0 {
            return Err("grid count must be at least 1".into());
        }
        if spacing == Spacing::Log && min <= 0.0 {
            return Err("log grids need MIN > 0".into());
        }
        Ok(GridSpec { min, max, count, spacing })
    }
}

impl TryFrom<String> for GridSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sp = match self.spacing {
            Spacing::Linear => "linear",
            Spacing::Log => "log",
        };
        write!(f, "{}:{}:{}:{sp}", self.min, self.max, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DimRange(u32, u32);

impl FromStr for DimRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or_else(|| format!("expected MIN:MAX, got '{s}'"))?;
        let parse = |p: &str| p.trim().parse::<u32>().map_err(|e| format!("bad dimension '{p}': {e}"));
        let (lo, hi) = (parse(a)?, parse(b)?);
        if lo == 0 || lo > hi || hi > MAX_DIMENSION {
            return Err(format!("dimension range must satisfy 1 <= MIN <= MAX <= {MAX_DIMENSION}"));
        }
        Ok(DimRange(lo, hi))
    }
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub d: Option<u32>,
    pub grid: Option<GridSpec>,
    pub timings: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

/// Settings after layering flags over the config file over defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub d: Option<u32>,
    pub grid: Option<GridSpec>,
    pub timings: bool,
}

impl RunConfig {
    fn resolve(cli: &Cli, file: FileConfig, d: Option<u32>, grid: Option<GridSpec>) -> Result<Self, CliError> {
        let tol = cli.tol.or(file.tol);
        if let Some(t) = tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(CliError::Usage(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(RunConfig {
            format: cli.format.or(file.format).unwrap_or(OutputFormat::Csv),
            out: cli.out.clone().or(file.out),
            tol,
            d: d.or(file.d),
            grid: grid.or(file.grid),
            timings: cli.timings || file.timings.unwrap_or(false),
        })
    }

    fn require_d(&self) -> Result<u32, CliError> {
        let d = self.d.ok_or_else(|| CliError::Usage("--d is required".into()))?;
        if d == 0 || d > MAX_DIMENSION {
            return Err(CliError::Usage(format!("--d must lie in 1..={MAX_DIMENSION}, got {d}")));
        }
        Ok(d)
    }

    fn grid_or(&self, default: &str) -> GridSpec {
        self.grid.unwrap_or_else(|| default.parse().expect("default grid is valid"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(Error::Domain(_) | Error::Precondition(_) | Error::Unsupported(_)) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    match execute(&cli) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| usage(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        // Fails only if a pool already exists, e.g. when run twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the command; `Ok(false)` when a check failed.
fn execute(cli: &Cli) -> Result<bool, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, &RunConfig::resolve(cli, file, a.d, a.grid)?),
        Command::Verify(a) => cmd_verify(&RunConfig::resolve(cli, file, a.d, None)?),
        Command::Transform(a) => cmd_transform(a, &RunConfig::resolve(cli, file, a.d, a.grid)?),
        Command::Thermal(a) => cmd_thermal(a, &RunConfig::resolve(cli, file, None, a.grid)?),
        Command::Report(a) => cmd_report(a, &RunConfig::resolve(cli, file, None, None)?),
    }
}

/// A numeric table with named columns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_bytes<R: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| usage(format!("cannot format CSV: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| usage(format!("cannot format CSV: {e}")))
}

fn table_csv(t: &Table) -> Result<Vec<u8>, CliError> {
    let header: Vec<&str> = t.columns.iter().map(String::as_str).collect();
    csv_bytes(&header, t.rows.iter().map(|r| r.iter().map(|&v| format_number(v)).collect::<Vec<_>>()))
}

fn json_bytes<T: Serialize>(doc: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(doc).map_err(|e| usage(format!("cannot format JSON: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| usage(format!("cannot write to stdout: {e}")))
        }
    }
}

#[derive(Serialize)]
struct TableDoc<'a, P: Serialize> {
    schema_version: u32,
    command: &'a str,
    parameters: P,
    #[serde(flatten)]
    table: &'a Table,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvalParams {
    function: EvalFn,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    grid: String,
}

fn need<T>(v: Option<T>, flag: &str, function: &str) -> Result<T, CliError> {
    v.ok_or_else(|| usage(format!("{function} requires --{flag}")))
}

fn eval_options(cfg: &RunConfig) -> EvalOptions {
    let mut opts = EvalOptions::default();
    if let Some(t) = cfg.tol {
        opts.rel_tol = t;
    }
    opts
}

fn lens_state(t: f64) -> Result<LensState, CliError> {
    LensState::new(t).map_err(|e| usage(e.to_string()))
}

fn cmd_eval(args: &EvalArgs, cfg: &RunConfig) -> Result<bool, CliError> {
    let start = Instant::now();
    let grid = cfg.grid.ok_or_else(|| usage("eval requires --grid"))?;
    let xs = grid.points();
    let opts = eval_options(cfg);
    let mut params = EvalParams {
        function: args.function,
        d: None,
        delta: None,
        alpha: None,
        t: None,
        grid: grid.to_string(),
    };
    let name = format!("{:?}", args.function);
    let values: Vec<f64> = match args.function {
        EvalFn::EiDelta | EvalFn::GDelta | EvalFn::HDelta => {
            let delta = need(args.delta, "delta", &name)?;
            params.delta = Some(delta);
            let ev = DeltaExpEvaluator::with_options(DeltaParam::new(delta)?, opts)?;
            let f = |x: f64| match args.function {
                EvalFn::EiDelta => ev.ei(x),
                EvalFn::GDelta => ev.g(x),
                _ => ev.h(x),
            };
            xs.par_iter().map(|&x| f(x)).collect::<Result<_, _>>()?
        }
        EvalFn::PhiD | EvalFn::FD | EvalFn::FDAlpha => {
            let d = cfg.require_d()?;
            params.d = Some(d);
            let base = RadialEigenfunction::with_options(d, opts)?;
            match args.function {
                EvalFn::PhiD => xs.par_iter().map(|&r| base.phi(r)).collect::<Result<_, _>>()?,
                EvalFn::FD => xs.par_iter().map(|&r| base.f(r)).collect::<Result<_, _>>()?,
                _ => {
                    let alpha = need(args.alpha, "alpha", &name)?;
                    params.alpha = Some(alpha);
                    let rf = RegularizedFunction::new(base, alpha)?;
                    xs.par_iter().map(|&r| rf.value(r)).collect::<Result<_, _>>()?
                }
            }
        }
        EvalFn::ETh | EvalFn::ES => {
            let t = need(args.t, "t", &name)?;
            params.t = Some(t);
            let state = lens_state(t)?;
            let f = if args.function == EvalFn::ETh { e_th } else { e_s };
            xs.par_iter().map(|&r| f(&state, r)).collect::<Result<_, _>>()?
        }
    };
    let table = Table::new(&["x", "value"], xs.iter().zip(values).map(|(&x, v)| vec![x, v]).collect());
    let bytes = match cfg.format {
        OutputFormat::Csv => table_csv(&table)?,
        OutputFormat::Json => json_bytes(&TableDoc {
            schema_version: SCHEMA_VERSION,
            command: "eval",
            parameters: params,
            table: &table,
            runtime_ms: cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
        })?,
    };
    emit(cfg, &bytes)?;
    Ok(true)
}

fn report_bytes(report: &VerificationReport, cfg: &RunConfig) -> Result<Vec<u8>, CliError> {
    match cfg.format {
        OutputFormat::Json => json_bytes(report),
        OutputFormat::Csv => {
            let mut header = vec!["d", "check", "relation", "residual", "tolerance", "passed"];
            if cfg.timings {
                header.push("runtime_ms");
            }
            let rows = report.checks.iter().map(|c| {
                let mut row = vec![
                    c.d.to_string(),
                    c.id.clone(),
                    c.relation.clone(),
                    format_number(c.residual),
                    format_number(c.tolerance),
                    c.passed.to_string(),
                ];
                if cfg.timings {
                    row.push(c.runtime_ms.map(format_number).unwrap_or_default());
                }
                row
            });
            csv_bytes(&header, rows)
        }
    }
}

fn finish_report(mut report: VerificationReport, cfg: &RunConfig) -> Result<bool, CliError> {
    if !cfg.timings {
        report.strip_timings();
    }
    emit(cfg, &report_bytes(&report, cfg)?)?;
    let s = report.summary;
    eprintln!("{}: {}/{} checks passed", report.suite, s.passed, s.total);
    for c in report.checks.iter().filter(|c| !c.passed) {
        match &c.error {
            Some(e) => eprintln!("  d={} {}: error: {e}", c.d, c.id),
            None => eprintln!("  d={} {}: residual {:e} > tolerance {:e}", c.d, c.id, c.residual, c.tolerance),
        }
    }
    if s.errored > 0 {
        return Err(CliError::Numerical(Error::Convergence {
            what: format!("{} check(s) stopped with a numerical error", s.errored),
            iterations: 0,
        }));
    }
    Ok(report.all_passed())
}

fn cmd_verify(cfg: &RunConfig) -> Result<bool, CliError> {
    let d = cfg.require_d()?;
    let checks = verify_dimension(d, &SuiteOptions { tolerance: cfg.tol })?;
    finish_report(VerificationReport::new(format!("verify-d{d}"), checks), cfg)
}

fn cmd_report(args: &ReportArgs, cfg: &RunConfig) -> Result<bool, CliError> {
    let DimRange(lo, hi) = args.dims;
    let opts = SuiteOptions { tolerance: cfg.tol };
    let per_dim = (lo..=hi)
        .into_par_iter()
        .map(|d| verify_dimension(d, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let checks = per_dim.into_iter().flatten().collect();
    finish_report(VerificationReport::new(format!("report-d{lo}-d{hi}"), checks), cfg)
}

#[derive(Debug, Serialize)]
struct TransformParams {
    function: TransformFn,
    d: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    grid: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    passed: Option<bool>,
}

/// A profile together with its closed-form transform.
struct Transformable {
    profile: Box<dyn RadialProfile>,
    reference: Box<dyn Fn(f64) -> crate::Result<f64> + Sync>,
}

fn transformable(args: &TransformArgs, d: u32, params: &mut TransformParams) -> Result<Transformable, CliError> {
    let name = format!("{:?}", args.function);
    Ok(match args.function {
        TransformFn::FD => {
            let f = RadialEigenfunction::new(d)?;
            let g = f.clone();
            Transformable {
                profile: Box::new(f),
                reference: Box::new(move |rho| Ok(-PI.powf(0.5 * d as f64) * g.f(0.5 * rho)?)),
            }
        }
        TransformFn::PhiD => {
            let f = RadialEigenfunction::new(d)?;
            let g = f.clone();
            Transformable {
                profile: Box::new(PhiProfile(f)),
                reference: Box::new(move |rho| Ok(-(2.0 * PI).powf(0.5 * d as f64) * g.phi(rho)?)),
            }
        }
        TransformFn::FDAlpha => {
            let alpha = need(args.alpha, "alpha", &name)?;
            params.alpha = Some(alpha);
            let rf = RegularizedFunction::new(RadialEigenfunction::new(d)?, alpha)?;
            Transformable {
                profile: Box::new(rf),
                reference: Box::new(move |rho| Ok(g_hat_alpha(d, alpha, rho)? - h_hat_alpha(d, alpha, rho)?)),
            }
        }
        TransformFn::Gaussian => {
            let a = args.a;
            if !(a > 0.0) || !a.is_finite() {
                return Err(usage(format!("--a must be positive, got {a}")));
            }
            params.a = Some(a);
            Transformable {
                profile: Box::new(GaussianProfile { a }),
                reference: Box::new(move |rho| gaussian_transform(a, d, rho)),
            }
        }
        TransformFn::ETh => {
            if d != 2 {
                return Err(usage("e_th is a planar field; use --d 2"));
            }
            let t = need(args.t, "t", &name)?;
            params.t = Some(t);
            let state = lens_state(t)?;
            let c = 4.0 * t + 1.0;
            Transformable {
                profile: Box::new(FnProfile {
                    f: move |r: f64| if r == 0.0 { 0.0 } else { e_th(&state, r).unwrap_or(f64::NAN) },
                    origin_exponent: 0.0,
                    tail: TailHint::Gaussian { rate: 0.5 + 1.0 / c },
                }),
                // F[e_th](rho) = pi e_s(rho / 2).
                reference: Box::new(move |rho| Ok(PI * e_s(&state, 0.5 * rho)?)),
            }
        }
    })
}

fn cmd_transform(args: &TransformArgs, cfg: &RunConfig) -> Result<bool, CliError> {
    let start = Instant::now();
    let d = cfg.require_d()?;
    let grid = cfg.grid_or("0.2:10:25:log");
    let rhos = grid.points();
    let mut params = TransformParams {
        function: args.function,
        d,
        alpha: None,
        a: None,
        t: None,
        grid: grid.to_string(),
        tolerance: None,
        passed: None,
    };
    let tr = transformable(args, d, &mut params)?;
    let mut plan = RadialTransformPlan::new(d)?;
    if let (Some(t), false) = (cfg.tol, args.compare) {
        plan.rel_tol = t;
    }
    let values = radial_fourier_grid(&plan, tr.profile.as_ref(), &rhos)?;
    let mut passed = true;
    let table = if args.compare {
        let tol = cfg.tol.unwrap_or(DEFAULT_COMPARE_TOL);
        let rows = values
            .par_iter()
            .map(|v| {
                let reference = (tr.reference)(v.rho)?;
                let gap = (v.value - reference).abs();
                let residual = if reference == 0.0 { gap } else { gap / reference.abs() };
                Ok(vec![v.rho, v.value, reference, residual])
            })
            .collect::<crate::Result<Vec<_>>>()?;
        passed = rows.iter().all(|r| r[3] <= tol);
        params.tolerance = Some(tol);
        params.passed = Some(passed);
        Table::new(&["rho", "value", "reference", "residual"], rows)
    } else {
        Table::new(&["rho", "value"], values.iter().map(|v| vec![v.rho, v.value]).collect())
    };
    let bytes = match cfg.format {
        OutputFormat::Csv => table_csv(&table)?,
        OutputFormat::Json => json_bytes(&TableDoc {
            schema_version: SCHEMA_VERSION,
            command: "transform",
            parameters: params,
            table: &table,
            runtime_ms: cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
        })?,
    };
    emit(cfg, &bytes)?;
    if !passed {
        eprintln!("transform: residual above tolerance");
    }
    Ok(passed)
}

#[derive(Serialize)]
struct ThermalDoc<'a> {
    schema_version: u32,
    command: &'a str,
    t: f64,
    grid: String,
    fit: FitReport,
    tolerance: f64,
    passed: bool,
    profiles: &'a Table,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
}

fn cmd_thermal(args: &ThermalArgs, cfg: &RunConfig) -> Result<bool, CliError> {
    let start = Instant::now();
    if !(args.t > 0.0) || !args.t.is_finite() {
        return Err(usage(format!("--t must be positive, got {}", args.t)));
    }
    let state = lens_state(args.t)?;
    let grid = cfg.grid_or("0.2:4:25:log");
    let radii = grid.points();
    if radii.iter().any(|&r| r <= 0.0) {
        return Err(usage("thermal grids need positive radii"));
    }
    let rows = radii
        .par_iter()
        .map(|&r| Ok(vec![r, e_th(&state, r)?, e_s(&state, r)?]))
        .collect::<crate::Result<Vec<_>>>()?;
    let table = Table::new(&["radius", "e_th", "e_s"], rows);
    let fit = fourier_consistency(&state, &radii)?;
    let tolerance = cfg.tol.unwrap_or(DEFAULT_FIT_TOL);
    let passed = fit.residual <= tolerance;
    let bytes = match cfg.format {
        OutputFormat::Csv => table_csv(&table)?,
        OutputFormat::Json => json_bytes(&ThermalDoc {
            schema_version: SCHEMA_VERSION,
            command: "thermal",
            t: args.t,
            grid: grid.to_string(),
            fit,
            tolerance,
            passed,
            profiles: &table,
            runtime_ms: cfg.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
        })?,
    };
    emit(cfg, &bytes)?;
    eprintln!(
        "thermal fit: amplitude {} scale {} residual {:e} (tolerance {:e})",
        format_number(fit.amplitude),
        format_number(fit.scale),
        fit.residual,
        tolerance
    );
    Ok(passed)
}
