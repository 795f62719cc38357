//! `droplet` — command-line driver for the power-law drop spreading library.
//!
//! Subcommands:
//! - `similarity`: integrate one self-similar profile, at a fixed center
//!   curvature or at the critical curvature that flattens the advancing front;
//! - `table`: compute the spreading-constant rows for a list of flow indices;
//! - `spread`: evaluate the dimensional front radius and apparent contact
//!   angle on a logarithmic time grid;
//! - `pde`: run the direct radial thin-film solver, fit the front's power law,
//!   and optionally compare the late-time shape against the similarity profile.
//!
//! All CSV output carries a single header line with floats at 17 significant
//! digits; JSON output uses plain finite numbers (absent values are `null`).
//! Identical invocations produce byte-identical output. Exit codes: 0 success,
//! 1 solver/runtime failure, 2 argument error.

// Validation deliberately uses negated comparisons (`!(x > 0.0)`) so that NaN
// arguments fail closed instead of slipping past an `x <= 0.0` test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Args, Parser, Subcommand, ValueEnum};
use powerlaw_droplet::{
    critical_constants_row, find_critical_kappa, fit_spreading_exponent, init_drop,
    integrate_profile, make_setup, rescale_and_compare, run_until, ConstantsRow, CriticalSolution,
    Error, FluidParams, InitialShape, IntegratorOptions, OdeParams, RadialGrid, RadiusSeries,
    SimilarityProfile, TABLE_LAMBDAS,
};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

/// Environment variable capping the number of worker threads for `table`.
const THREADS_ENV: &str = "POWERLAW_DROPLET_THREADS";

#[derive(Parser)]
#[command(
    name = "droplet",
    version,
    about = "Self-similar spreading of thin power-law drops",
    propagate_version = true
)]
struct RunConfig {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a similarity profile at a fixed or critical center curvature
    Similarity(SimilarityArgs),
    /// Tabulate spreading constants for a list of flow-behavior indices
    Table(TableArgs),
    /// Evaluate the dimensional spreading laws on a logarithmic time grid
    Spread(SpreadArgs),
    /// Run the direct radial thin-film solver and summarize the front motion
    Pde(PdeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Options of the similarity integrator shared by every subcommand that
/// solves the profile equation.
#[derive(Args)]
struct SolverArgs {
    /// Bisection tolerance on the critical center curvature
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    /// Height at which the similarity integration terminates
    #[arg(long, default_value_t = IntegratorOptions::default().h_stop)]
    h_stop: f64,
    /// Step size as a fraction of the local solution scale
    #[arg(long, default_value_t = IntegratorOptions::default().step_fraction)]
    step_fraction: f64,
}

impl SolverArgs {
    fn options(&self) -> IntegratorOptions {
        IntegratorOptions {
            h_stop: self.h_stop,
            step_fraction: self.step_fraction,
            ..IntegratorOptions::default()
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output path (defaults to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Flow-behavior index λ of the power-law fluid
    #[arg(long)]
    lambda: f64,
    /// Center curvature κ₀ for a single integration
    #[arg(long, required_unless_present = "critical", conflicts_with = "critical")]
    kappa0: Option<f64>,
    /// Solve for the critical center curvature instead of fixing κ₀
    #[arg(long)]
    critical: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TableArgs {
    /// Comma-separated flow-behavior indices (default: the built-in grid)
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SpreadArgs {
    /// Flow-behavior index λ of the power-law fluid
    #[arg(long)]
    lambda: f64,
    /// Drop volume
    #[arg(long, default_value_t = 1.0)]
    volume: f64,
    /// Surface tension coefficient
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Consistency index of the power-law rheology
    #[arg(long, default_value_t = 1.0)]
    m_index: f64,
    /// First sample time
    #[arg(long, default_value_t = 1.0)]
    t_start: f64,
    /// Last sample time
    #[arg(long, default_value_t = 1e4)]
    t_end: f64,
    /// Number of logarithmically spaced samples (endpoints included)
    #[arg(long, default_value_t = 50)]
    t_points: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PdeArgs {
    /// Flow-behavior index λ of the power-law fluid (≥ 1)
    #[arg(long)]
    lambda: f64,
    /// Drop volume
    #[arg(long, default_value_t = 1.0)]
    volume: f64,
    /// Surface tension coefficient
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Consistency index of the power-law rheology
    #[arg(long, default_value_t = 1.0)]
    m_index: f64,
    /// Number of radial cells
    #[arg(long, default_value_t = 256)]
    grid_n: usize,
    /// Outer radius of the computational domain
    #[arg(long = "domain-R", alias = "domain-r", default_value_t = 6.0, value_name = "DOMAIN_R")]
    domain_r: f64,
    /// Final time of the run (starts from a smooth bump at t = 0)
    #[arg(long, default_value_t = 1e3)]
    t_end: f64,
    /// Also solve the critical similarity profile and report the sup-norm
    /// deviation of the rescaled final state
    #[arg(long)]
    compare_similarity: bool,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output base path: writes BASE.front.csv, BASE.profile.csv, and
    /// BASE.summary.json (required for csv; json writes one document)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

/// A command failure: what to print on stderr and which code to exit with.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::InvalidParameter(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    let result = match &config.command {
        Command::Similarity(args) => cmd_similarity(args),
        Command::Table(args) => cmd_table(args),
        Command::Spread(args) => cmd_spread(args),
        Command::Pde(args) => cmd_pde(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("droplet: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// 17-significant-digit float serialization used by every CSV column.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn to_json(value: &impl Serialize) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 1,
        message: format!("serialization failed: {e}"),
    })?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- similarity

#[derive(Serialize)]
struct SimilarityScalars<'a> {
    lambda: f64,
    kappa0: f64,
    classification: &'a str,
    eta_f: Option<f64>,
    #[serde(rename = "I")]
    shape_factor: Option<f64>,
    eta_i: Option<f64>,
    #[serde(rename = "Hp_at_eta_i")]
    hp_at_eta_i: Option<f64>,
}

#[derive(Serialize)]
struct SimilarityDocument<'a> {
    #[serde(flatten)]
    scalars: SimilarityScalars<'a>,
    samples: Vec<ProfileRow>,
}

#[derive(Serialize)]
struct ProfileRow {
    eta: f64,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "Hp")]
    hp: f64,
    #[serde(rename = "K")]
    k: f64,
}

fn similarity_scalars(profile: &SimilarityProfile) -> SimilarityScalars<'_> {
    SimilarityScalars {
        lambda: profile.params.lambda,
        kappa0: profile.params.kappa0,
        classification: profile.classification.as_str(),
        eta_f: profile.eta_f,
        shape_factor: profile.shape_factor,
        eta_i: profile.eta_i,
        hp_at_eta_i: profile.hp_at_eta_i,
    }
}

fn profile_csv(profile: &SimilarityProfile) -> String {
    let mut csv = String::from("eta,H,Hp,K\n");
    for s in &profile.samples {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            fmt_float(s.eta),
            fmt_float(s.h),
            fmt_float(s.hp),
            fmt_float(s.k)
        );
    }
    csv
}

fn cmd_similarity(args: &SimilarityArgs) -> Result<(), Failure> {
    let opts = args.solver.options();
    let profile = if args.critical {
        find_critical_kappa(args.lambda, args.solver.tolerance, &opts)?.profile
    } else {
        let params = OdeParams::new(args.lambda, args.kappa0.expect("required by clap"))?;
        integrate_profile(&params, &opts)?
    };
    match args.output.format {
        Format::Json => {
            let doc = SimilarityDocument {
                scalars: similarity_scalars(&profile),
                samples: profile
                    .samples
                    .iter()
                    .map(|s| ProfileRow {
                        eta: s.eta,
                        h: s.h,
                        hp: s.hp,
                        k: s.k,
                    })
                    .collect(),
            };
            write_output(args.output.out.as_deref(), &to_json(&doc)?)
        }
        Format::Csv => {
            // Profile CSV to the target, scalar sidecar as JSON: next to the
            // file when writing to disk, on stderr when streaming to stdout.
            let sidecar = to_json(&similarity_scalars(&profile))?;
            write_output(args.output.out.as_deref(), &profile_csv(&profile))?;
            match &args.output.out {
                Some(p) => std::fs::write(p.with_extension("json"), sidecar)?,
                None => eprint!("{sidecar}"),
            }
            Ok(())
        }
    }
}

// --------------------------------------------------------------------- table

#[derive(Serialize)]
#[serde(untagged)]
enum TableEntry {
    Row {
        lambda: f64,
        kappa_lambda: f64,
        eta_f: f64,
        #[serde(rename = "I")]
        shape_factor: f64,
        #[serde(rename = "S_lambda")]
        s_lambda: f64,
        #[serde(rename = "Q_lambda")]
        q_lambda: f64,
    },
    Failed {
        lambda: f64,
        error: String,
    },
}

/// Worker-thread cap: the environment override if set, else the machine's
/// available parallelism.
fn thread_cap() -> Result<usize, Failure> {
    match std::env::var(THREADS_ENV) {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Failure::usage(format!(
                "{THREADS_ENV} must be a positive integer, got {raw:?}"
            ))),
        },
        Err(_) => Ok(thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Computes constants rows in input order, distributing rows over at most
/// `workers` threads. Output is independent of the thread count.
fn table_rows(
    lambdas: &[f64],
    tolerance: f64,
    opts: &IntegratorOptions,
    workers: usize,
) -> Vec<Result<ConstantsRow, Error>> {
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers.min(lambdas.len()) {
            let tx = tx.clone();
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= lambdas.len() {
                    break;
                }
                let row = critical_constants_row(lambdas[i], tolerance, opts);
                if tx.send((i, row)).is_err() {
                    break;
                }
            });
        }
    });
    drop(tx);
    let mut rows: Vec<Option<Result<ConstantsRow, Error>>> =
        lambdas.iter().map(|_| None).collect();
    for (i, row) in rx {
        rows[i] = Some(row);
    }
    rows.into_iter()
        .map(|r| r.expect("every index is computed exactly once"))
        .collect()
}

fn cmd_table(args: &TableArgs) -> Result<(), Failure> {
    let lambdas: Vec<f64> = match &args.lambdas {
        Some(list) => list.clone(),
        None => TABLE_LAMBDAS.to_vec(),
    };
    if lambdas.is_empty() {
        return Err(Failure::usage("--lambdas must list at least one value"));
    }
    let opts = args.solver.options();
    opts.validate()?;
    let rows = table_rows(&lambdas, args.solver.tolerance, &opts, thread_cap()?);

    let mut failed = 0usize;
    match args.output.format {
        Format::Csv => {
            let mut csv = String::from("lambda,kappa_lambda,eta_f,I,S_lambda,Q_lambda\n");
            for (lambda, row) in lambdas.iter().zip(&rows) {
                match row {
                    Ok(r) => {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{}",
                            fmt_float(r.lambda),
                            fmt_float(r.kappa_lambda),
                            fmt_float(r.eta_f),
                            fmt_float(r.shape_factor),
                            fmt_float(r.s_lambda),
                            fmt_float(r.q_lambda)
                        );
                    }
                    Err(e) => {
                        // The CSV schema has no error column; report failed
                        // rows on stderr and flag the exit code.
                        failed += 1;
                        eprintln!("droplet: table: lambda = {lambda}: {e}");
                    }
                }
            }
            write_output(args.output.out.as_deref(), &csv)?;
        }
        Format::Json => {
            let entries: Vec<TableEntry> = lambdas
                .iter()
                .zip(&rows)
                .map(|(&lambda, row)| match row {
                    Ok(r) => TableEntry::Row {
                        lambda: r.lambda,
                        kappa_lambda: r.kappa_lambda,
                        eta_f: r.eta_f,
                        shape_factor: r.shape_factor,
                        s_lambda: r.s_lambda,
                        q_lambda: r.q_lambda,
                    },
                    Err(e) => {
                        failed += 1;
                        TableEntry::Failed {
                            lambda,
                            error: e.to_string(),
                        }
                    }
                })
                .collect();
            write_output(args.output.out.as_deref(), &to_json(&entries)?)?;
        }
    }
    if failed > 0 {
        Err(Failure {
            code: 1,
            message: format!("{failed} of {} table rows failed", lambdas.len()),
        })
    } else {
        Ok(())
    }
}

// -------------------------------------------------------------------- spread

#[derive(Serialize)]
struct SpreadRow {
    t: f64,
    r_f: f64,
    tan_theta: f64,
    theta_deg: f64,
}

/// Logarithmically spaced times from `t_start` to `t_end`, both included.
fn log_spaced(t_start: f64, t_end: f64, points: usize) -> Vec<f64> {
    if points == 1 || t_end == t_start {
        return vec![t_start];
    }
    let ratio = t_end / t_start;
    let mut ts: Vec<f64> = (0..points)
        .map(|i| t_start * ratio.powf(i as f64 / (points - 1) as f64))
        .collect();
    ts[0] = t_start;
    *ts.last_mut().expect("points >= 2") = t_end;
    ts
}

fn cmd_spread(args: &SpreadArgs) -> Result<(), Failure> {
    if !(args.t_start > 0.0) || !args.t_start.is_finite() {
        return Err(Failure::usage(format!(
            "--t-start must be finite and > 0, got {}",
            args.t_start
        )));
    }
    if !(args.t_end >= args.t_start) || !args.t_end.is_finite() {
        return Err(Failure::usage(format!(
            "--t-end must be finite and >= --t-start, got {}",
            args.t_end
        )));
    }
    if args.t_points < 1 {
        return Err(Failure::usage("--t-points must be at least 1"));
    }
    let fluid = FluidParams::new(args.lambda, args.m_index, args.gamma)?;
    let opts = args.solver.options();
    let row = critical_constants_row(args.lambda, args.solver.tolerance, &opts)?;
    let setup = make_setup(fluid, args.volume, row)?;

    let rows: Vec<SpreadRow> = log_spaced(args.t_start, args.t_end, args.t_points)
        .into_iter()
        .map(|t| {
            let tan_theta = setup.tan_contact_angle(t)?;
            Ok(SpreadRow {
                t,
                r_f: setup.front_radius(t),
                tan_theta,
                theta_deg: tan_theta.atan().to_degrees(),
            })
        })
        .collect::<Result<_, Error>>()?;

    match args.output.format {
        Format::Csv => {
            let mut csv = String::from("t,r_f,tan_theta,theta_deg\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    fmt_float(r.t),
                    fmt_float(r.r_f),
                    fmt_float(r.tan_theta),
                    fmt_float(r.theta_deg)
                );
            }
            write_output(args.output.out.as_deref(), &csv)
        }
        Format::Json => write_output(args.output.out.as_deref(), &to_json(&rows)?),
    }
}

// ----------------------------------------------------------------------- pde

#[derive(Serialize)]
struct PdeSummary {
    lambda: f64,
    grid_n: usize,
    #[serde(rename = "domain_R")]
    domain_r: f64,
    t_end: f64,
    front_threshold: f64,
    r_front_final: f64,
    /// Front exponent fitted over the last decade of the recorded series.
    beta_hat: Option<f64>,
    mass_drift: f64,
    clipped_mass: f64,
    /// Sup-norm deviation from the rescaled critical profile, relative to the
    /// center height scale (present with --compare-similarity).
    deviation: Option<f64>,
}

#[derive(Serialize)]
struct PdeDocument {
    #[serde(flatten)]
    summary: PdeSummary,
    front: Vec<FrontRow>,
    profile: Vec<HeightRow>,
}

#[derive(Serialize)]
struct FrontRow {
    t: f64,
    r_front: f64,
}

#[derive(Serialize)]
struct HeightRow {
    r: f64,
    h: f64,
}

/// Fits the front power law over the trailing decade of the series (falling
/// back to the full series when the decade holds too few points).
fn fitted_exponent(series: &RadiusSeries) -> Option<f64> {
    let full: Vec<(f64, f64)> = series
        .points
        .iter()
        .copied()
        .filter(|&(t, r)| t > 0.0 && r > 0.0)
        .collect();
    let t_end = full.last()?.0;
    let decade: Vec<(f64, f64)> = full
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t_end / 10.0)
        .collect();
    for window in [decade, full] {
        if window.len() >= 3 {
            if let Ok((slope, _)) = fit_spreading_exponent(&RadiusSeries::new(window).ok()?) {
                return Some(slope);
            }
        }
    }
    None
}

/// Assembles a constants row from an already-computed critical solution.
fn constants_from(sol: &CriticalSolution) -> Result<ConstantsRow, Error> {
    let p = &sol.profile;
    let eta_f = p
        .eta_f
        .ok_or_else(|| Error::NonConvergence("critical profile has no front".into()))?;
    let shape_factor = p
        .shape_factor
        .ok_or_else(|| Error::NonConvergence("critical profile has no shape factor".into()))?;
    let hp_i = p.hp_at_eta_i.ok_or_else(|| {
        Error::NoInflection("critical profile has no curvature sign change".into())
    })?;
    Ok(ConstantsRow {
        lambda: sol.lambda,
        kappa_lambda: sol.kappa_lambda,
        eta_f,
        shape_factor,
        s_lambda: powerlaw_droplet::spreading_prefactor(sol.lambda, eta_f, shape_factor),
        q_lambda: powerlaw_droplet::angle_prefactor(sol.lambda, hp_i, shape_factor),
    })
}

fn cmd_pde(args: &PdeArgs) -> Result<(), Failure> {
    if args.format == Format::Csv && args.out.is_none() {
        return Err(Failure::usage(
            "pde writes several files; pass --out BASE (or --format json for a single document)",
        ));
    }
    if !(args.t_end > 0.0) || !args.t_end.is_finite() {
        return Err(Failure::usage(format!(
            "--t-end must be finite and > 0, got {}",
            args.t_end
        )));
    }
    let fluid = FluidParams::new(args.lambda, args.m_index, args.gamma)?;
    let grid = RadialGrid::new(args.grid_n, args.domain_r)?;
    // A smooth compact bump occupying the inner twelfth of the domain.
    let initial_radius = args.domain_r / 12.0;
    let state = init_drop(
        grid,
        fluid,
        args.volume,
        InitialShape::CosineBump,
        initial_radius,
    )?;
    let front_threshold = state.default_front_threshold();
    let (state, series) = run_until(state, args.t_end, front_threshold)?;

    let deviation = if args.compare_similarity {
        let opts = args.solver.options();
        let sol = find_critical_kappa(args.lambda, args.solver.tolerance, &opts)?;
        let row = constants_from(&sol)?;
        let setup = make_setup(fluid, args.volume, row)?;
        Some(rescale_and_compare(&state, &sol, &setup)?)
    } else {
        None
    };

    let summary = PdeSummary {
        lambda: args.lambda,
        grid_n: args.grid_n,
        domain_r: args.domain_r,
        t_end: args.t_end,
        front_threshold,
        r_front_final: state.front_radius(front_threshold),
        beta_hat: fitted_exponent(&series),
        mass_drift: state.mass_drift(),
        clipped_mass: state.clipped_mass,
        deviation,
    };
    let front_rows: Vec<FrontRow> = series
        .points
        .iter()
        .map(|&(t, r_front)| FrontRow { t, r_front })
        .collect();
    let profile_rows: Vec<HeightRow> = state
        .grid
        .centers()
        .into_iter()
        .zip(&state.h)
        .map(|(r, &h)| HeightRow { r, h })
        .collect();

    match args.format {
        Format::Json => {
            let doc = PdeDocument {
                summary,
                front: front_rows,
                profile: profile_rows,
            };
            write_output(args.out.as_deref(), &to_json(&doc)?)
        }
        Format::Csv => {
            let base = args.out.as_deref().expect("checked above");
            let mut front_csv = String::from("t,r_front\n");
            for row in &front_rows {
                let _ = writeln!(front_csv, "{},{}", fmt_float(row.t), fmt_float(row.r_front));
            }
            let mut profile_csv = String::from("r,h\n");
            for row in &profile_rows {
                let _ = writeln!(profile_csv, "{},{}", fmt_float(row.r), fmt_float(row.h));
            }
            std::fs::write(suffixed(base, "front.csv"), front_csv)?;
            std::fs::write(suffixed(base, "profile.csv"), profile_csv)?;
            std::fs::write(suffixed(base, "summary.json"), to_json(&summary)?)?;
            Ok(())
        }
    }
}

/// `BASE` → `BASE.suffix` without touching any extension `BASE` already has.
fn suffixed(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_os_string();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}
