//! Command-line driver: `estimate`, `verify` and `export`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or invalid input,
//! 3 quadrature accuracy failure, 4 residual tolerance breach.
//!
//! `--config FILE` reads `key = value` lines (keys are flag names without the
//! leading dashes); flags given on the command line take precedence. Axis
//! indices on the command line and in output files are 1-based.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{BtbsField, Field, HeatField, KsField};
use crate::model::{heat_mean, Family, FieldConfig, InitialData, MultiTime, SpacePoint};
use crate::quadrature::{
    btbs_boundary_values, ks_boundary_values, quad_btbs_moment, quad_ks_moment, Moment, QuadratureSpec, Scheme,
};
use crate::sampler::{martingale_probe, mc_bs_mean, mc_btbs_moment, sample_sheet_grid, RngStream};
use crate::verify::{
    residual_bs_2n, residual_bs_nonlinear, residual_bs_system, residual_btbs_nonlinear, residual_btbs_system,
    residual_ks_system, sweep, CoeffSource, ResidualReport, Route, StencilSpec,
};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ACCURACY: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "btbs", version, about = "Brownian-time Brownian sheet and KS-sheet field laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate one field value by Monte Carlo or quadrature.
    #[command(args_override_self = true)]
    Estimate(EstimateArgs),
    /// Evaluate PDE residuals on a probe grid.
    #[command(args_override_self = true)]
    Verify(VerifyArgs),
    /// Write field grids, sheet samples or martingale profiles.
    #[command(args_override_self = true)]
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FamilyArg {
    Btbs,
    Ks,
    Bs,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Btbs => Family::Btbs,
            FamilyArg::Ks => Family::Ks,
            FamilyArg::Bs => Family::Bs,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct CommonArgs {
    /// Field family.
    #[arg(long, value_enum, default_value = "btbs")]
    family: FamilyArg,
    /// Number of time parameters.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Space dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Initial data: `cosine:θ1,..,θd`, `gaussian:c1,..,cd,width` or `const:c`.
    #[arg(long = "f", default_value = "cosine:1")]
    f: String,
    /// Moment power: 0 for u, 1 for the first-power KS field, 2 for the squared-weight field.
    #[arg(long, default_value_t = 0)]
    p: u8,
    /// 1-based axis index for p = 1, 2.
    #[arg(long)]
    j: Option<usize>,
    /// Per-axis quadrature order (automatic when absent).
    #[arg(long)]
    order: Option<usize>,
    /// Quadrature refinement tolerance.
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
    /// Random seed.
    #[arg(long, env = "BTBS_SEED", default_value_t = 0)]
    seed: u64,
    /// Random stream id.
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Worker threads for Monte Carlo.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Mc,
    Quad,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Time point `t1,..,tn`.
    #[arg(long)]
    t: String,
    /// Space point `x1,..,xd` (origin when absent).
    #[arg(long)]
    x: Option<String>,
    #[arg(long, value_enum, default_value = "quad")]
    method: Method,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    /// Output JSON file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SystemArg {
    BtbsLin,
    BtbsNonlin,
    BsLin,
    BsNonlin,
    #[value(name = "bs-2n")]
    #[serde(rename = "bs-2n")]
    Bs2n,
    Ks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RouteArg {
    Analytic,
    Eigen,
    Fd,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Analytic => Route::Analytic,
            RouteArg::Eigen => Route::EigenReduced,
            RouteArg::Fd => Route::FiniteDifference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CoeffArg {
    Recursion,
    Printed,
}

#[derive(Debug, Clone, Args, Serialize)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    system: SystemArg,
    /// Probe grid `T_LO:T_HI:NT/X_LO:X_HI:NX`, applied to every axis.
    #[arg(long, default_value = "0.5:2:3/-0.5:0.5:3")]
    grid: String,
    /// Largest admissible relative residual.
    #[arg(long)]
    tol: f64,
    /// Derivative route (analytic for bs-lin/bs-nonlin/bs-2n, eigen otherwise).
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// Coefficient source for bs-2n.
    #[arg(long, value_enum, default_value = "recursion")]
    coeffs: CoeffArg,
    /// Time step (default 1e-3 * min t).
    #[arg(long)]
    h_time: Option<f64>,
    /// Space step.
    #[arg(long, default_value_t = 1e-2)]
    h_space: f64,
    /// Output CSV file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum What {
    FieldGrid,
    SheetSample,
    MartingaleProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, value_enum)]
    what: What,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Grid `T_LO:T_HI:NT/X_LO:X_HI:NX`; the time part gives sheet knots.
    #[arg(long, default_value = "0:2:5/-1:1:5")]
    grid: String,
    /// Time point for martingale-profile.
    #[arg(long)]
    t: Option<String>,
    /// Space point for martingale-profile.
    #[arg(long)]
    x: Option<String>,
    /// Probe values of s_j (default: five points evenly spaced in [0, t_j)).
    #[arg(long)]
    probes: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run(args: Vec<OsString>) -> i32 {
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let outcome = match cli.command {
        Command::Estimate(a) => cmd_estimate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Export(a) => cmd_export(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Accuracy { .. } => EXIT_ACCURACY,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Splices `--key value` pairs from a `--config` file directly after the
/// subcommand, so command-line flags (which come later) override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| Error::invalid(format!("cannot read config {path}: {e}")))?;
    let mut extra = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("{path}:{}: expected key = value", lineno + 1)))?;
        let key = k.trim().trim_start_matches("--");
        if key == "config" {
            return Err(Error::invalid("config files cannot include other config files"));
        }
        extra.push(OsString::from(format!("--{key}")));
        extra.push(OsString::from(v.trim()));
    }
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = args[..2].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parsing helpers

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| Error::invalid(format!("cannot parse {what} component '{v}'"))))
        .collect()
}

fn parse_initial(spec: &str, d: usize) -> Result<InitialData> {
    let (kind, params) = spec
        .split_once(':')
        .ok_or_else(|| Error::invalid(format!("initial data '{spec}' must look like kind:params")))?;
    let values = parse_list(params, "initial data")?;
    let f = match kind {
        "cosine" | "cos" => InitialData::cosine(values)?,
        "gaussian" | "gauss" => {
            let (width, center) =
                values.split_last().ok_or_else(|| Error::invalid("gaussian needs center and width"))?;
            InitialData::gaussian(center.to_vec(), *width)?
        }
        "const" | "constant" => {
            if values.len() != 1 {
                return Err(Error::invalid("const takes exactly one value"));
            }
            InitialData::constant(values[0])?
        }
        other => return Err(Error::invalid(format!("unknown initial data kind '{other}'"))),
    };
    f.check_dim(d)?;
    Ok(f)
}

#[derive(Debug, Clone, PartialEq)]
struct Axis {
    lo: f64,
    hi: f64,
    count: usize,
}

impl Axis {
    fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!("grid axis '{s}' must be LO:HI:COUNT")));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| Error::invalid(format!("bad grid bound '{}'", parts[0])))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| Error::invalid(format!("bad grid bound '{}'", parts[1])))?;
        let count: usize =
            parts[2].trim().parse().map_err(|_| Error::invalid(format!("bad grid count '{}'", parts[2])))?;
        if count == 0 || !lo.is_finite() || !hi.is_finite() || (count > 1 && hi < lo) {
            return Err(Error::invalid(format!("invalid grid axis '{s}'")));
        }
        Ok(Self { lo, hi, count })
    }

    fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.hi } else { self.lo + step * i as f64 }).collect()
    }
}

fn parse_grid(s: &str) -> Result<(Axis, Axis)> {
    let (t, x) =
        s.split_once('/').ok_or_else(|| Error::invalid(format!("grid '{s}' must be T_LO:T_HI:NT/X_LO:X_HI:NX")))?;
    Ok((Axis::parse(t)?, Axis::parse(x)?))
}

/// Row-major tensor product of `dim` copies of `axis`.
fn tensor(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out
}

fn config(common: &CommonArgs) -> Result<FieldConfig> {
    FieldConfig::new(common.n, common.d, common.family.into())
}

fn moment(common: &CommonArgs) -> Result<Moment> {
    let j = match common.j {
        Some(0) => return Err(Error::invalid("--j is 1-based")),
        Some(j) if j > common.n => return Err(Error::invalid(format!("--j {j} exceeds n = {}", common.n))),
        Some(j) => Some(j - 1),
        None => None,
    };
    Moment::from_power(common.p, j)
}

fn quad_spec(common: &CommonArgs) -> Result<QuadratureSpec> {
    if !(common.quad_tol > 0.0) {
        return Err(Error::invalid("--quad-tol must be positive"));
    }
    let scheme = if common.order.is_some() { Scheme::GaussHermiteTensor } else { Scheme::Adaptive };
    Ok(QuadratureSpec { scheme, order: common.order, refinement_tol: common.quad_tol, ..QuadratureSpec::default() })
}

fn stream(common: &CommonArgs) -> RngStream {
    RngStream::new(common.seed, common.stream)
}

// ---------------------------------------------------------------------------
// Output

/// Decimal scientific notation with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

struct SigFigFormatter;

impl serde_json::ser::Formatter for SigFigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_num(value).as_bytes())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFigFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

/// Writes `bytes` to `path` (or standard output), removing a partial file on failure.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        None => {
            io::stdout().write_all(bytes)?;
            Ok(())
        }
        Some(p) => {
            let result = fs::File::create(p).and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()));
            if let Err(e) = result {
                let _ = fs::remove_file(p);
                return Err(e.into());
            }
            Ok(())
        }
    }
}

/// CSV with `#` comment lines carrying the version and configuration.
fn csv_bytes<C: Serialize>(config: &C, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# btbs {VERSION}")?;
    let cfg = String::from_utf8(to_json(config)?).map_err(|e| Error::invalid(e.to_string()))?;
    writeln!(buf, "# config {}", cfg.trim_end())?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(buf)
}

#[derive(Serialize)]
struct TableJson<'a, C: Serialize> {
    version: &'static str,
    config: &'a C,
    columns: &'a [String],
    rows: Vec<Vec<serde_json::Value>>,
}

fn json_table<C: Serialize>(config: &C, header: &[String], rows: &[Vec<f64>]) -> Result<Vec<u8>> {
    let rows = rows.iter().map(|r| r.iter().map(|v| serde_json::Value::from(*v)).collect()).collect();
    to_json(&TableJson { version: VERSION, config, columns: header, rows })
}

fn axis_names(prefix: &str, count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("{prefix}{i}")).collect()
}

// ---------------------------------------------------------------------------
// estimate

#[derive(Serialize)]
struct EstimateReport<'a> {
    version: &'static str,
    config: &'a EstimateArgs,
    method: Method,
    value: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quad_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    elapsed_seconds: f64,
}

fn cmd_estimate(a: &EstimateArgs) -> Result<i32> {
    let c = &a.common;
    let cfg = config(c)?;
    let f = parse_initial(&c.f, c.d)?;
    let m = moment(c)?;
    let t = MultiTime::new(parse_list(&a.t, "--t")?)?;
    let x = match &a.x {
        Some(s) => SpacePoint::new(parse_list(s, "--x")?)?,
        None => SpacePoint::zeros(c.d),
    };
    cfg.check_time(&t)?;
    cfg.check_space(&x)?;
    if cfg.family != Family::Ks && m.power() == 1 {
        return Err(Error::invalid("p = 1 exists only for the ks family"));
    }
    if cfg.family == Family::Bs && m != Moment::Plain {
        return Err(Error::invalid("the bs family has only p = 0"));
    }
    let start = Instant::now();
    let mut report = EstimateReport {
        version: VERSION,
        config: a,
        method: a.method,
        value: [0.0, 0.0],
        stderr: None,
        n_samples: None,
        quad_error: None,
        order: None,
        elapsed_seconds: 0.0,
    };
    match (a.method, cfg.family) {
        (Method::Mc, Family::Ks) => {
            return Err(Error::invalid("Monte Carlo is not available for the ks family; use --method quad"));
        }
        (Method::Mc, family) => {
            let est = if family == Family::Bs {
                mc_bs_mean(&cfg, &f, &t, &x, a.samples, &stream(c), c.workers)?
            } else {
                mc_btbs_moment(&cfg, &f, m, &t, &x, a.samples, &stream(c), c.workers)?
            };
            report.value = [est.value, 0.0];
            report.stderr = Some(est.stderr);
            report.n_samples = Some(est.n_samples);
        }
        (Method::Quad, Family::Bs) => {
            report.value = [heat_mean(&f, t.product(), 0, x.as_slice()), 0.0];
            report.quad_error = Some(0.0);
        }
        (Method::Quad, Family::Btbs) => {
            if t.is_boundary() {
                report.value = [btbs_boundary_values(&cfg, &f, m, &t, &x)?, 0.0];
                report.quad_error = Some(0.0);
            } else {
                let v = quad_btbs_moment(&cfg, &f, m, &t, &x, &quad_spec(c)?)?;
                report.value = [v.value, 0.0];
                report.quad_error = Some(v.error);
                report.order = Some(v.order);
            }
        }
        (Method::Quad, Family::Ks) => {
            if t.is_boundary() {
                let v = ks_boundary_values(&cfg, &f, m, &t.zero_axes(), &t, &x)?;
                report.value = [v.re, v.im];
                report.quad_error = Some(0.0);
            } else {
                let v = quad_ks_moment(&cfg, &f, m, &t, &x, &quad_spec(c)?)?;
                report.value = [v.value.re, v.value.im];
                report.quad_error = Some(v.error);
                report.order = Some(v.order);
            }
        }
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    emit(a.out.as_deref(), &to_json(&report)?)?;
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let c = &a.common;
    let family = match a.system {
        SystemArg::BtbsLin | SystemArg::BtbsNonlin => Family::Btbs,
        SystemArg::BsLin | SystemArg::BsNonlin | SystemArg::Bs2n => Family::Bs,
        SystemArg::Ks => Family::Ks,
    };
    let cfg = FieldConfig::new(c.n, c.d, family)?;
    let f = parse_initial(&c.f, c.d)?;
    let q = quad_spec(c)?;
    let route: Route = match a.route {
        Some(r) => r.into(),
        None if family == Family::Bs => Route::Analytic,
        None if f.laplacian_eigenvalue().is_some() => Route::EigenReduced,
        None => Route::FiniteDifference,
    };
    if !(a.tol > 0.0) || !(a.h_space > 0.0) || a.h_time.is_some_and(|h| !(h > 0.0)) {
        return Err(Error::invalid("--tol, --h-time and --h-space must be positive"));
    }
    let (t_axis, x_axis) = parse_grid(&a.grid)?;
    let t_points = tensor(&t_axis.points(), c.n);
    let x_points = tensor(&x_axis.points(), c.d);
    let indexed = matches!(a.system, SystemArg::BtbsLin | SystemArg::BsLin | SystemArg::Ks);
    let mut probes = Vec::new();
    for t in &t_points {
        for x in &x_points {
            if indexed {
                for j in 0..c.n {
                    probes.push((t.clone(), x.clone(), Some(j)));
                }
            } else {
                probes.push((t.clone(), x.clone(), None));
            }
        }
    }
    let stencil_for = |t: &[f64]| -> Result<StencilSpec> {
        let d = StencilSpec::default_for(t);
        StencilSpec::new(a.h_time.unwrap_or(d.h_time), a.h_space)
    };
    let coeffs = match a.coeffs {
        CoeffArg::Recursion => CoeffSource::Recursion,
        CoeffArg::Printed => CoeffSource::PrintedTable,
    };

    let heat = HeatField::new(cfg, f.clone())?;
    let btbs_u = BtbsField::new(cfg, f.clone(), Moment::Plain, q)?;
    let btbs_su: Vec<BtbsField> =
        (0..c.n).map(|j| BtbsField::new(cfg, f.clone(), Moment::Quadratic(j), q)).collect::<Result<_>>()?;
    let ks_u = KsField::new(cfg, f.clone(), Moment::Plain, q)?;
    let ks_lin: Vec<KsField> =
        (0..c.n).map(|j| KsField::new(cfg, f.clone(), Moment::Linear(j), q)).collect::<Result<_>>()?;
    let ks_sq: Vec<KsField> =
        (0..c.n).map(|j| KsField::new(cfg, f.clone(), Moment::Quadratic(j), q)).collect::<Result<_>>()?;

    let results = sweep(&probes, |(t, x, j)| {
        let s = stencil_for(t)?;
        match (a.system, j) {
            (SystemArg::BsLin, Some(j)) => residual_bs_system(&cfg, &f, *j, t, x, &heat, route, &s),
            (SystemArg::BsNonlin, _) => residual_bs_nonlinear(&cfg, &f, t, x, &heat, route, &s),
            (SystemArg::Bs2n, _) => residual_bs_2n(&cfg, &f, t, x, &heat, coeffs, route, &s),
            (SystemArg::BtbsLin, Some(j)) => residual_btbs_system(&cfg, &f, *j, t, x, &btbs_u, &btbs_su[*j], route, &s),
            (SystemArg::BtbsNonlin, _) => {
                let su: Vec<&dyn Field<Value = f64>> = btbs_su.iter().map(|b| b as &dyn Field<Value = f64>).collect();
                residual_btbs_nonlinear(&cfg, &f, t, x, &btbs_u, &su, route, &s)
            }
            (SystemArg::Ks, Some(j)) => {
                residual_ks_system(&cfg, &f, *j, t, x, &ks_u, &ks_lin[*j], &ks_sq[*j], route, &s)
            }
            _ => Err(Error::invalid("inconsistent probe")),
        }
    });
    let reports: Vec<ResidualReport> = results.into_iter().collect::<Result<_>>()?;

    let mut header = vec!["system".to_string()];
    header.extend(axis_names("t", c.n));
    header.extend(axis_names("x", c.d));
    for h in ["j", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_residual", "rel_residual", "h_time", "h_space", "notes"]
    {
        header.push(h.to_string());
    }
    let system_name = a.system.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let row = |r: &ResidualReport| -> Vec<String> {
        let mut row = vec![system_name.clone()];
        row.extend(r.t.iter().map(|v| fmt_num(*v)));
        row.extend(r.x.iter().map(|v| fmt_num(*v)));
        row.push(r.j.map(|j| (j + 1).to_string()).unwrap_or_default());
        for v in [r.lhs.re, r.lhs.im, r.rhs.re, r.rhs.im, r.abs_residual, r.rel_residual] {
            row.push(fmt_num(v));
        }
        let st = r.stencil.unwrap_or(StencilSpec { h_time: f64::NAN, h_space: f64::NAN });
        row.push(fmt_num(st.h_time));
        row.push(fmt_num(st.h_space));
        row.push(r.notes.join("; "));
        row
    };
    let rows: Vec<Vec<String>> = reports.iter().map(row).collect();
    emit(a.out.as_deref(), &csv_bytes(a, &header, &rows)?)?;

    let worst = reports.iter().enumerate().max_by(|(_, p), (_, q)| p.rel_residual.total_cmp(&q.rel_residual));
    match worst {
        Some((i, w)) if !(w.rel_residual <= a.tol) => {
            eprintln!("tolerance {} exceeded; worst row:", fmt_num(a.tol));
            eprintln!("{}", header.join(","));
            eprintln!("{}", rows[i].join(","));
            Ok(EXIT_TOLERANCE)
        }
        _ => Ok(EXIT_OK),
    }
}

// ---------------------------------------------------------------------------
// export

fn cmd_export(a: &ExportArgs) -> Result<i32> {
    let c = &a.common;
    let cfg = config(c)?;
    let (t_axis, x_axis) = parse_grid(&a.grid)?;
    let (header, rows) = match a.what {
        What::FieldGrid => field_grid(a, &cfg, &t_axis, &x_axis)?,
        What::SheetSample => sheet_sample(a, &cfg, &t_axis)?,
        What::MartingaleProfile => martingale_profile(a, &cfg)?,
    };
    let bytes = match a.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|v| fmt_num(*v)).collect()).collect();
            csv_bytes(a, &header, &rows)?
        }
        Format::Json => json_table(a, &header, &rows)?,
    };
    emit(Some(&a.out), &bytes)?;
    Ok(EXIT_OK)
}

type Table = (Vec<String>, Vec<Vec<f64>>);

fn field_grid(a: &ExportArgs, cfg: &FieldConfig, t_axis: &Axis, x_axis: &Axis) -> Result<Table> {
    let c = &a.common;
    let f = parse_initial(&c.f, c.d)?;
    let m = moment(c)?;
    let q = quad_spec(c)?;
    let mut header = axis_names("t", c.n);
    header.extend(axis_names("x", c.d));
    header.extend(["re", "im", "stderr"].map(String::from));
    let mut rows = Vec::new();
    for t in tensor(&t_axis.points(), c.n) {
        let tt = MultiTime::new(t.clone())?;
        for x in tensor(&x_axis.points(), c.d) {
            let xx = SpacePoint::new(x.clone())?;
            let (value, err) = match cfg.family {
                Family::Bs => {
                    if m != Moment::Plain {
                        return Err(Error::invalid("the bs family has only p = 0"));
                    }
                    (Complex64::new(heat_mean(&f, tt.product(), 0, &x), 0.0), 0.0)
                }
                Family::Btbs if tt.is_boundary() => (btbs_boundary_values(cfg, &f, m, &tt, &xx)?.into(), 0.0),
                Family::Btbs => {
                    let v = quad_btbs_moment(cfg, &f, m, &tt, &xx, &q)?;
                    (v.value.into(), v.error)
                }
                Family::Ks if tt.is_boundary() => (ks_boundary_values(cfg, &f, m, &tt.zero_axes(), &tt, &xx)?, 0.0),
                Family::Ks => {
                    let v = quad_ks_moment(cfg, &f, m, &tt, &xx, &q)?;
                    (v.value, v.error)
                }
            };
            let mut row = t.clone();
            row.extend(&x);
            row.extend([value.re, value.im, err]);
            rows.push(row);
        }
    }
    Ok((header, rows))
}

fn sheet_sample(a: &ExportArgs, cfg: &FieldConfig, t_axis: &Axis) -> Result<Table> {
    let knots = vec![t_axis.points(); cfg.n];
    let sample = sample_sheet_grid(cfg, &knots, &mut stream(&a.common).rng())?;
    let mut header = axis_names("t", cfg.n);
    header.extend(axis_names("w", cfg.d));
    let rows = (0..sample.len())
        .map(|flat| {
            let idx = sample.multi_index(flat);
            let mut row: Vec<f64> = idx.iter().zip(&sample.knots).map(|(i, k)| k[*i]).collect();
            row.extend_from_slice(sample.at(&idx));
            row
        })
        .collect();
    Ok((header, rows))
}

fn martingale_profile(a: &ExportArgs, cfg: &FieldConfig) -> Result<Table> {
    let c = &a.common;
    let f = parse_initial(&c.f, c.d)?;
    let t = MultiTime::new(parse_list(a.t.as_deref().unwrap_or(&vec!["1"; c.n].join(",")), "--t")?)?;
    let x = match &a.x {
        Some(s) => SpacePoint::new(parse_list(s, "--x")?)?,
        None => SpacePoint::zeros(c.d),
    };
    let j = match c.j {
        Some(0) => return Err(Error::invalid("--j is 1-based")),
        Some(j) => j - 1,
        None => 0,
    };
    let bs = FieldConfig::new(cfg.n, cfg.d, Family::Bs)?;
    bs.check_time(&t)?;
    t.require_axis(j)?;
    let probes = match &a.probes {
        Some(p) => parse_list(p, "--probes")?,
        None => {
            let tj = t.as_slice()[j];
            (0..5).map(|k| tj * k as f64 / 5.0).collect()
        }
    };
    let u = HeatField::new(bs, f.clone())?;
    let reference = u.value(t.as_slice(), x.as_slice())?;
    let est = martingale_probe(&bs, &u, j, &t, &x, &probes, a.samples, &stream(c), c.workers)?;
    let header = ["s_j", "value", "stderr", "n_samples", "reference"].map(String::from).to_vec();
    let rows =
        probes.iter().zip(est).map(|(s, e)| vec![*s, e.value, e.stderr, e.n_samples as f64, reference]).collect();
    Ok((header, rows))
}
