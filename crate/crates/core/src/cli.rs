//! Command-line front end: argument model, command dispatch and record output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;

use crate::asymptotics::{self, theorem_bound};
use crate::eigenfield::EigenField;
use crate::error::{Error, Result};
use crate::geometry::{AnnulusGeometry, BisphericalPoint};
use crate::oracle;
use crate::spectral::{self, SpectralSolution};

const RESIDUAL_SAMPLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "steklov",
    version,
    about = "First Steklov-Dirichlet eigenvalue of eccentric spherical annuli",
    args_override_self = true,
    allow_negative_numbers = true
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write records here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for independent solves.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Shape {
    /// Transverse dimension; the ambient space is R^(n+2).
    #[arg(long)]
    pub n: i64,
    #[arg(long)]
    pub r1: f64,
    #[arg(long)]
    pub r2: f64,
}

#[derive(Debug, Clone, Args)]
pub struct Offset {
    /// Centre offset t.
    #[arg(long)]
    pub t: Option<f64>,
    /// Gap width r2 - r1 - t.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FdGrid {
    #[arg(long, default_value_t = 64)]
    pub nxi: usize,
    #[arg(long, default_value_t = 64)]
    pub ntheta: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// One eigenvalue solve.
    Solve {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        offset: Offset,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Also run the finite-difference oracle and compare.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        grid: FdGrid,
        #[arg(long, default_value_t = 1e-3)]
        oracle_tol: f64,
        /// Write (xi, theta, u) samples of the normalized eigenfunction.
        #[arg(long)]
        grid_out: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        grid_n: usize,
    },
    /// Solves over a t or eps range `start:stop:step`.
    Sweep {
        #[command(flatten)]
        shape: Shape,
        #[arg(long)]
        t_grid: Option<String>,
        #[arg(long)]
        eps_grid: Option<String>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Also check monotonicity of the extrapolated FD eigenvalue.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        grid: FdGrid,
    },
    /// Thin-gap study over a decreasing eps list.
    Limit {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value = "1e-1,1e-2,1e-3,1e-4")]
        eps_list: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Fail on lemma checks as well as on the bound.
        #[arg(long)]
        strict: bool,
    },
    /// Per-mode recurrence diagnostics.
    Diag {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        offset: Offset,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Emit only the first ROWS modes.
        #[arg(long)]
        rows: Option<usize>,
    },
    /// Coordinate conversion in both directions.
    Coords {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        offset: Offset,
        /// `xi,theta[,phi_1,...]`; missing angles are zero. Repeatable.
        #[arg(long, allow_hyphen_values = true)]
        bispherical: Vec<String>,
        /// `x_1,...,x_{n+2}`. Repeatable.
        #[arg(long, allow_hyphen_values = true)]
        cartesian: Vec<String>,
    },
    /// Finite-difference eigenvalue against the spectral one.
    Oracle {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        offset: Offset,
        #[command(flatten)]
        grid: FdGrid,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 1e-3)]
        compare_tol: f64,
        /// Closed form for the concentric annulus (t = 0).
        #[arg(long)]
        concentric: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl<T: Into<Value>> From<Option<T>> for Value {
    fn from(x: Option<T>) -> Self {
        x.map_or(Value::Missing, Into::into)
    }
}

pub type Record = Vec<(String, Value)>;

fn push(rec: &mut Record, key: &str, v: impl Into<Value>) {
    rec.push((key.to_string(), v.into()));
}

/// Records plus the names of checks that failed.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub records: Vec<Record>,
    pub failed_checks: Vec<String>,
    pub notes: Vec<String>,
}

impl Outcome {
    fn check(&mut self, name: &str, ok: bool) {
        if !ok {
            self.failed_checks.push(name.to_string());
        }
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence(_)
        | Error::NotConverged(_)
        | Error::SingularSchur
        | Error::QuadratureFail(..)
        | Error::Io { .. } => 3,
        _ => 2,
    }
}

/// Argument vector with the `--config` file entries spliced in right after
/// the subcommand, so that later command-line flags override them.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::InvalidConfig(format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("{path}:{}: expected key = value", lineno + 1))
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => extra.push(flag),
            "false" => {}
            v => {
                extra.push(flag);
                extra.push(v.to_string());
            }
        }
    }
    let names = ["solve", "sweep", "limit", "diag", "coords", "oracle"];
    let at = args
        .iter()
        .skip(1)
        .position(|a| names.contains(&a.as_str()))
        .map(|p| p + 2)
        .ok_or_else(|| Error::InvalidConfig("no subcommand given".into()))?;
    let mut out = args[..at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-2 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("tol = {tol} outside (0, 1e-2]")))
    }
}

fn dimension(shape: &Shape) -> Result<usize> {
    if shape.n < 1 {
        return Err(Error::BadDimension(shape.n));
    }
    Ok(shape.n as usize)
}

fn geometry(shape: &Shape, offset: &Offset) -> Result<AnnulusGeometry> {
    let n = dimension(shape)?;
    match (offset.t, offset.eps) {
        (Some(t), None) => AnnulusGeometry::new(n, shape.r1, shape.r2, t),
        (None, Some(eps)) => AnnulusGeometry::from_eps(n, shape.r1, shape.r2, eps),
        _ => Err(Error::InvalidConfig("give exactly one of --t and --eps".into())),
    }
}

/// Inclusive `start:stop:step` range; the end point is kept when within half
/// a step.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("range `{spec}` is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && stop >= start && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn parse_list(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("`{p}` is not a number")))
        })
        .collect()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn geometry_fields(rec: &mut Record, g: &AnnulusGeometry) {
    push(rec, "n", g.n);
    push(rec, "r1", g.r1);
    push(rec, "r2", g.r2);
    push(rec, "t", g.t);
    push(rec, "eps", g.eps);
}

/// Solve record: geometry, σ, residuals, bound and margin.
pub fn solve_record(g: &AnnulusGeometry, tol: f64) -> Result<(Record, SpectralSolution)> {
    let sol = spectral::solve_sigma(g, tol)?;
    let field = EigenField::new(*g, sol.clone());
    let bound = theorem_bound(g.n, g.r1, g.r2);
    let mut rec = Record::new();
    geometry_fields(&mut rec, g);
    push(&mut rec, "alpha", g.alpha);
    push(&mut rec, "xi1", g.xi1);
    push(&mut rec, "xi2", g.xi2);
    push(&mut rec, "M", sol.m_trunc);
    push(&mut rec, "sigma", sol.sigma);
    push(&mut rec, "recursion_residual", sol.recursion_residual);
    push(&mut rec, "dirichlet_residual", field.dirichlet_residual(RESIDUAL_SAMPLES));
    push(&mut rec, "steklov_residual", field.steklov_residual(RESIDUAL_SAMPLES));
    push(&mut rec, "bound", bound);
    push(&mut rec, "margin", sol.sigma - bound);
    Ok((rec, sol))
}

fn oracle_fields(rec: &mut Record, report: &oracle::ComparisonReport) {
    push(rec, "fd_sigma", report.fd_sigma);
    push(rec, "fd_extrapolated", report.fd_extrapolated);
    push(rec, "relative_difference", report.relative_difference);
    push(rec, "oracle_pass", report.pass);
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    match &config.command {
        Command::Solve {
            shape,
            offset,
            tol,
            oracle: with_oracle,
            grid,
            oracle_tol,
            grid_out,
            grid_n,
        } => {
            check_tol(*tol)?;
            let g = geometry(shape, offset)?;
            let (mut rec, sol) = solve_record(&g, *tol)?;
            let mut out = Outcome::default();
            if *with_oracle {
                let fd = oracle::fd_sigma_extrapolated(&g, grid.nxi, grid.ntheta)?;
                let report = oracle::compare(sol.sigma, &fd, *oracle_tol);
                oracle_fields(&mut rec, &report);
                out.check("oracle_agreement", report.pass);
            }
            if let Some(path) = grid_out {
                let field = EigenField::new(g, sol).normalize()?;
                write_samples(path, &field.sample_grid(*grid_n, *grid_n))?;
                out.notes.push(format!("eigenfunction samples written to {}", path.display()));
            }
            out.records.push(rec);
            Ok(out)
        }
        Command::Sweep {
            shape,
            t_grid,
            eps_grid,
            tol,
            oracle: with_oracle,
            grid,
        } => {
            check_tol(*tol)?;
            let n = dimension(shape)?;
            let geoms: Vec<AnnulusGeometry> = match (t_grid, eps_grid) {
                (Some(r), None) => parse_range(r)?
                    .into_iter()
                    .map(|t| AnnulusGeometry::new(n, shape.r1, shape.r2, t))
                    .collect::<Result<_>>()?,
                (None, Some(r)) => parse_range(r)?
                    .into_iter()
                    .map(|e| AnnulusGeometry::from_eps(n, shape.r1, shape.r2, e))
                    .collect::<Result<_>>()?,
                _ => {
                    return Err(Error::InvalidConfig(
                        "give exactly one of --t-grid and --eps-grid".into(),
                    ))
                }
            };
            let rows: Vec<(Record, f64, Option<f64>)> = pool(config.jobs)?.install(|| {
                geoms
                    .par_iter()
                    .map(|g| {
                        let (mut rec, sol) = solve_record(g, *tol)?;
                        let fd = if *with_oracle {
                            let fd = oracle::fd_sigma_extrapolated(g, grid.nxi, grid.ntheta)?;
                            push(&mut rec, "fd_extrapolated", fd.best_sigma());
                            Some(fd.best_sigma())
                        } else {
                            None
                        };
                        Ok((rec, sol.sigma, fd))
                    })
                    .collect::<Result<_>>()
            })?;
            let mut by_t: Vec<(f64, f64, Option<f64>)> =
                geoms.iter().zip(&rows).map(|(g, r)| (g.t, r.1, r.2)).collect();
            by_t.sort_by(|a, b| a.0.total_cmp(&b.0));
            let decreasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] < w[0]);
            let mut out = Outcome::default();
            let spectral_ok = decreasing(by_t.iter().map(|r| r.1).collect());
            out.check("sweep_monotone_spectral", spectral_ok);
            out.notes.push(format!(
                "sigma strictly decreasing in t over {} points: {spectral_ok}",
                by_t.len()
            ));
            if *with_oracle {
                let fd_ok = decreasing(by_t.iter().filter_map(|r| r.2).collect());
                out.check("sweep_monotone_fd", fd_ok);
                out.notes.push(format!("fd sigma strictly decreasing in t: {fd_ok}"));
            }
            out.records = rows.into_iter().map(|r| r.0).collect();
            Ok(out)
        }
        Command::Limit {
            shape,
            eps_list,
            tol,
            strict,
        } => {
            check_tol(*tol)?;
            let n = dimension(shape)?;
            let eps = parse_list(eps_list)?;
            let report = pool(config.jobs)?
                .install(|| asymptotics::limit_study(n, shape.r1, shape.r2, &eps, *tol))?;
            let mut out = Outcome::default();
            for row in &report.rows {
                let mut rec = Record::new();
                push(&mut rec, "n", n);
                push(&mut rec, "r1", shape.r1);
                push(&mut rec, "r2", shape.r2);
                push(&mut rec, "eps", row.eps);
                push(&mut rec, "t", row.t);
                push(&mut rec, "alpha", row.alpha);
                push(&mut rec, "xi_gap", row.xi_gap);
                push(&mut rec, "M", row.m_trunc);
                push(&mut rec, "sigma", row.sigma);
                push(&mut rec, "bound", row.bound);
                push(&mut rec, "margin", row.margin);
                push(&mut rec, "s_increasing", row.s_increasing);
                push(&mut rec, "s_bound_excess", row.s_bound_excess);
                push(&mut rec, "k_calibrated", report.k_calibrated);
                push(&mut rec, "s_bound_ok", row.s_bound_ok);
                push(&mut rec, "r_limit_error", row.r_limit_error);
                push(&mut rec, "r_converged", row.r_converged);
                push(&mut rec, "recursion_consistent", row.recursion_consistent);
                push(&mut rec, "N1", row.n1);
                push(&mut rec, "N2", row.n2);
                push(&mut rec, "liminf_estimate", report.liminf_estimate);
                out.records.push(rec);
            }
            out.check("limit_margin", report.margins_ok);
            out.check("limit_margin_trend", report.margin_trend_ok);
            let failing = report.failing_eps();
            if !failing.is_empty() {
                out.notes
                    .push(format!("lemma checks failed at eps = {failing:?}"));
                if *strict {
                    out.check("limit_lemmas", false);
                }
            }
            out.notes.push(format!(
                "liminf estimate (min sigma over the eps list) = {:.16e}, bound = {:.16e}",
                report.liminf_estimate, report.bound
            ));
            Ok(out)
        }
        Command::Diag {
            shape,
            offset,
            tol,
            rows,
        } => {
            check_tol(*tol)?;
            let g = geometry(shape, offset)?;
            let (sol, d) = asymptotics::diagnose(&g, *tol)?;
            let count = rows.map_or(sol.m_trunc, |r| r.min(sol.m_trunc));
            let mut out = Outcome::default();
            for m in 0..count {
                let mut rec = Record::new();
                push(&mut rec, "m", m);
                push(&mut rec, "S_m", d.S[m]);
                push(&mut rec, "R_m", d.R[m]);
                push(&mut rec, "L_m", d.L[m]);
                push(&mut rec, "U_m", d.U[m]);
                push(&mut rec, "c_sq_m", d.c_sq[m]);
                push(&mut rec, "C_tilde_m", d.c_tilde[m]);
                out.records.push(rec);
            }
            out.notes.push(format!(
                "M = {}, sigma = {:.16e}, N1 = {:?}, N2 = {:?}",
                sol.m_trunc, sol.sigma, d.N1, d.N2
            ));
            Ok(out)
        }
        Command::Coords {
            shape,
            offset,
            bispherical,
            cartesian,
        } => {
            let g = geometry(shape, offset)?;
            if bispherical.is_empty() && cartesian.is_empty() {
                return Err(Error::InvalidConfig(
                    "give at least one --bispherical or --cartesian point".into(),
                ));
            }
            let mut out = Outcome::default();
            for spec in bispherical {
                let v = parse_list(spec)?;
                if v.len() < 2 || v.len() > 2 + g.n {
                    return Err(Error::InvalidConfig(format!(
                        "`{spec}` needs xi, theta and up to {} angles",
                        g.n
                    )));
                }
                let mut phi = v[2..].to_vec();
                phi.resize(g.n, 0.0);
                let p = g.point(v[0], v[1], phi);
                let x = g.to_cartesian(&p);
                out.records.push(coords_record(&g, "to_cartesian", &p, &x));
            }
            for spec in cartesian {
                let x = parse_list(spec)?;
                if x.len() != g.dim() {
                    return Err(Error::InvalidConfig(format!(
                        "`{spec}` needs {} coordinates",
                        g.dim()
                    )));
                }
                let p = g.from_cartesian(&x)?;
                out.records.push(coords_record(&g, "to_bispherical", &p, &x));
            }
            Ok(out)
        }
        Command::Oracle {
            shape,
            offset,
            grid,
            tol,
            compare_tol,
            concentric,
        } => {
            let n = dimension(shape)?;
            let mut out = Outcome::default();
            if *concentric {
                if !(shape.r1 > 0.0 && shape.r1 < shape.r2) {
                    return Err(Error::BadRadii {
                        r1: shape.r1,
                        r2: shape.r2,
                    });
                }
                let mut rec = Record::new();
                push(&mut rec, "n", n);
                push(&mut rec, "r1", shape.r1);
                push(&mut rec, "r2", shape.r2);
                push(&mut rec, "sigma_concentric", oracle::concentric_sigma(n, shape.r1, shape.r2));
                out.records.push(rec);
                return Ok(out);
            }
            check_tol(*tol)?;
            let g = geometry(shape, offset)?;
            let sol = spectral::solve_sigma(&g, *tol)?;
            info!("spectral sigma {:.16e} at M = {}", sol.sigma, sol.m_trunc);
            let fd = oracle::fd_sigma_extrapolated(&g, grid.nxi, grid.ntheta)?;
            let report = oracle::compare(sol.sigma, &fd, *compare_tol);
            let mut rec = Record::new();
            geometry_fields(&mut rec, &g);
            push(&mut rec, "spectral_sigma", report.spectral_sigma);
            push(&mut rec, "fd_sigma", report.fd_sigma);
            push(&mut rec, "fd_extrapolated", report.fd_extrapolated);
            push(&mut rec, "relative_difference", report.relative_difference);
            push(&mut rec, "n_xi", report.n_xi);
            push(&mut rec, "n_theta", report.n_theta);
            push(&mut rec, "tolerance", report.tolerance);
            push(&mut rec, "pass", report.pass);
            out.records.push(rec);
            out.check("oracle_agreement", report.pass);
            Ok(out)
        }
    }
}

fn coords_record(g: &AnnulusGeometry, direction: &str, p: &BisphericalPoint, x: &[f64]) -> Record {
    let mut rec = Record::new();
    push(&mut rec, "direction", direction);
    push(&mut rec, "xi", p.xi);
    push(&mut rec, "theta", p.theta);
    for (k, phi) in p.phi.iter().enumerate() {
        push(&mut rec, &format!("phi_{}", k + 1), *phi);
    }
    for (k, xk) in x.iter().enumerate() {
        push(&mut rec, &format!("x_{}", k + 1), *xk);
    }
    push(&mut rec, "h", p.h);
    push(&mut rec, "inside_annulus", (g.xi2..=g.xi1).contains(&p.xi));
    rec
}

/// 17 significant digits, '.' decimal separator.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(x) => format_float(*x),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => s.clone(),
        Value::Missing => String::new(),
    }
}

fn json_value(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Float(x) if x.is_finite() => format_float(*x),
        Value::Float(_) | Value::Missing => "null".into(),
        Value::Bool(b) => b.to_string(),
        Value::Text(s) => serde_json::to_string(s).expect("string serializes"),
    }
}

/// Serialized records. All records must share the same keys in the same
/// order.
pub fn render(records: &[Record], format: Format) -> Result<Vec<u8>> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidConfig("no records to emit".into()))?;
    let keys: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
    if records
        .iter()
        .any(|r| !r.iter().map(|(k, _)| k.as_str()).eq(keys.iter().copied()))
    {
        return Err(Error::InvalidConfig("records have differing columns".into()));
    }
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::CRLF)
                .from_writer(Vec::new());
            let io = |e: csv::Error| Error::Io {
                path: "<buffer>".into(),
                message: e.to_string(),
            };
            w.write_record(&keys).map_err(io)?;
            for r in records {
                w.write_record(r.iter().map(|(_, v)| csv_field(v))).map_err(io)?;
            }
            w.into_inner().map_err(|e| Error::Io {
                path: "<buffer>".into(),
                message: e.to_string(),
            })
        }
        Format::Json => {
            let mut s = String::from("[\n");
            for (i, r) in records.iter().enumerate() {
                let fields: Vec<String> = r
                    .iter()
                    .map(|(k, v)| {
                        format!("{}: {}", serde_json::to_string(k).expect("key"), json_value(v))
                    })
                    .collect();
                s.push_str("  {");
                s.push_str(&fields.join(", "));
                s.push('}');
                if i + 1 < records.len() {
                    s.push(',');
                }
                s.push('\n');
            }
            s.push_str("]\n");
            Ok(s.into_bytes())
        }
    }
}

/// Write records to `path` (stdout when None); returns the byte count.
pub fn emit(records: &[Record], format: Format, path: Option<&Path>) -> Result<usize> {
    let bytes = render(records, format)?;
    match path {
        Some(p) => fs::write(p, &bytes).map_err(|e| Error::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        })?,
        None => std::io::stdout()
            .lock()
            .write_all(&bytes)
            .map_err(|e| Error::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            })?,
    }
    Ok(bytes.len())
}

fn write_samples(path: &Path, samples: &[(f64, f64, f64)]) -> Result<()> {
    let records: Vec<Record> = samples
        .iter()
        .map(|&(xi, theta, u)| {
            let mut rec = Record::new();
            push(&mut rec, "xi", xi);
            push(&mut rec, "theta", theta);
            push(&mut rec, "u", u);
            rec
        })
        .collect();
    emit(&records, Format::Csv, Some(path)).map(|_| ())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(args).unwrap()
    }

    #[test]
    fn range_is_inclusive() {
        let v = parse_range("0.05:0.45:0.05").unwrap();
        assert_eq!(v.len(), 9);
        assert!((v[8] - 0.45).abs() < 1e-12);
        assert_eq!(parse_range("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.5, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.trim_start_matches('-').split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
    }

    #[test]
    fn solve_requires_exactly_one_offset() {
        let c = parse(&["steklov", "solve", "--n", "1", "--r1", "1", "--r2", "2"]);
        assert!(matches!(run(&c), Err(Error::InvalidConfig(_))));
        let c = parse(&["steklov", "solve", "--n", "1", "--r1", "1", "--r2", "2", "--t", "0.5", "--eps", "0.5"]);
        assert!(matches!(run(&c), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn concentric_offset_is_rejected() {
        let c = parse(&["steklov", "solve", "--n", "1", "--r1", "1", "--r2", "2", "--t", "0"]);
        let e = run(&c).unwrap_err();
        assert_eq!(e, Error::DegenerateConcentric);
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("oracle --concentric"));
    }

    #[test]
    fn render_csv_and_json() {
        let mut rec = Record::new();
        push(&mut rec, "name", "a,b");
        push(&mut rec, "x", 0.5);
        push(&mut rec, "k", 3usize);
        push(&mut rec, "flag", true);
        push(&mut rec, "gap", Option::<f64>::None);
        let csv = String::from_utf8(render(&[rec.clone()], Format::Csv).unwrap()).unwrap();
        assert_eq!(
            csv,
            "name,x,k,flag,gap\r\n\"a,b\",5.0000000000000000e-1,3,true,\r\n"
        );
        let json = String::from_utf8(render(&[rec], Format::Json).unwrap()).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed[0]["x"], 0.5);
        assert_eq!(parsed[0]["name"], "a,b");
        assert!(parsed[0]["gap"].is_null());
        assert!(render(&[], Format::Csv).is_err());
    }

    #[test]
    fn mismatched_columns_are_rejected() {
        let mut a = Record::new();
        push(&mut a, "x", 1.0);
        let mut b = Record::new();
        push(&mut b, "y", 1.0);
        assert!(render(&[a, b], Format::Json).is_err());
    }

    #[test]
    fn config_entries_precede_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# defaults\nn = 1\nr1 = 1\nr2 = 2\nt = 0.3\noracle = false\n").unwrap();
        let args: Vec<String> = ["steklov", "solve", "--config", path.to_str().unwrap(), "--t", "0.5"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let expanded = expand_config(args).unwrap();
        let c = RunConfig::try_parse_from(expanded).unwrap();
        match c.command {
            Command::Solve { shape, offset, oracle, .. } => {
                assert_eq!((shape.n, shape.r2), (1, 2.0));
                assert_eq!(offset.t, Some(0.5));
                assert!(!oracle);
            }
            _ => panic!("wrong command"),
        }
    }

    #[test]
    fn coords_both_directions() {
        let c = parse(&[
            "steklov", "coords", "--n", "1", "--r1", "1", "--r2", "2", "--t", "0.5",
            "--bispherical", "0.8,1.1,0.4", "--cartesian", "1.5,0.2,-0.1",
        ]);
        let out = run(&c).unwrap();
        assert_eq!(out.records.len(), 2);
        let keys: Vec<&str> = out.records[0].iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["direction", "xi", "theta", "phi_1", "x_1", "x_2", "x_3", "h", "inside_annulus"]);
    }
}
