//! Command-line front end.
//!
//! Three subcommands share the artifact conventions of [`crate::io`]:
//!
//! * `flow --config <path> [--out <dir>] [--deterministic]` runs the implicit
//!   time stepping and writes `trace.csv`, `state_<k>.txt` snapshots (every
//!   `output.state_stride`-th step plus the final one), and `manifest.txt`;
//! * `eigen --config <path> [--method flow|direct|oracle-p2] [--out <dir>]`
//!   computes the ground state and writes `ground_state.txt`,
//!   `eigen_summary.txt`, and `manifest.txt`;
//! * `diagnose --config <path> [--out <dir>]` re-reads a flow run's artifacts
//!   from the output directory and executes the structural checks, writing
//!   `checks.csv` and `diagnose_summary.txt`.
//!
//! Exit codes: 0 success, 2 usage or config validation, 3 solver failure
//! (stall, nonconvergence, or a failed required check), 4 I/O and artifact
//! problems. Every error path prints `error: <code>` alone on the first
//! stderr line, where `<code>` is one of `usage`, `validation`, `parse`,
//! `io`, `missing-artifact`, `version-mismatch`, `solver-stall`,
//! `solver-failure`, `nonconvergence`, `check-failed`; prose follows on later
//! lines. The `FRACFLOW_THREADS` environment variable caps the worker pool;
//! `--deterministic` forces one thread. All artifacts are written atomically,
//! and reruns of the same config produce byte-identical files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config, resolve_ic, ConfigError, IcError, RunConfig};
use crate::diagnostics::{
    check_barrier, check_energy_identity, check_large_time_limit, check_rayleigh_monotone,
    check_sup_monotone, check_weighted_seminorm, estimate_holder, fit_decay_rate, ordering_slack,
    weighted_slack, CheckReport, DiagError,
};
use crate::eigen::{
    dense_p2_oracle, ground_state_direct, ground_state_flow, EigenError, GroundState,
};
use crate::field::Field;
use crate::grid::{Cylinder, Grid1D};
use crate::io::{
    fmt_f64, read_manifest, read_snapshot, read_trace_csv, write_checks_csv, write_manifest,
    write_snapshot, write_trace_csv, IoError, Manifest,
};
use crate::stepper::{run_flow, FlowParams, FlowTrace, InnerMethod, StepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Fixed per-step slack of the Rayleigh monotonicity check.
pub const RAYLEIGH_SLACK: f64 = 1e-8;
/// Budget of the informational decay-rate comparison (relative).
pub const DECAY_FIT_BUDGET: f64 = 0.02;
/// Budget of the informational large-time-limit distance (L^p, normalized).
pub const LARGE_TIME_TOL: f64 = 1e-2;

#[derive(Parser)]
#[command(
    name = "fracflow",
    version,
    about = "Implicit flow, ground states, and property checks for a doubly nonlinear nonlocal evolution"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the implicit time-stepping flow and write its artifacts.
    Flow(RunArgs),
    /// Compute the ground state of the energy on the configured grid.
    Eigen(EigenArgs),
    /// Re-read a finished flow run and execute the structural checks.
    Diagnose(RunArgs),
}

#[derive(Args)]
pub struct RunArgs {
    /// Path to the run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides output.dir from the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Force single-threaded, byte-reproducible execution.
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args)]
pub struct EigenArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Eigensolver route.
    #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
    pub method: MethodArg,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Normalized large-time limit of the flow itself.
    Flow,
    /// Preconditioned descent on the Rayleigh quotient.
    Direct,
    /// Dense factorization route, p = 2 only.
    OracleP2,
}

/// A classified failure: machine code, exit status, and prose.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub exit: i32,
    pub message: String,
}

impl CliError {
    fn new(code: &'static str, exit: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            exit,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", EXIT_USAGE, message)
    }

    fn validation(message: impl Into<String>) -> Self {
        Self::new("validation", EXIT_USAGE, message)
    }
}

impl From<ConfigError> for CliError {
    fn from(err: ConfigError) -> Self {
        match err {
            ConfigError::Io { .. } => CliError::new("io", EXIT_IO, err.to_string()),
            ConfigError::Invalid { issues } => CliError::validation(
                issues
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join("\n"),
            ),
        }
    }
}

impl From<IoError> for CliError {
    fn from(err: IoError) -> Self {
        let code = match &err {
            IoError::Io { .. } => "io",
            IoError::Parse { .. } => "parse",
            IoError::VersionMismatch { .. } => "version-mismatch",
            IoError::MissingArtifact { .. } => "missing-artifact",
        };
        CliError::new(code, EXIT_IO, err.to_string())
    }
}

impl From<EigenError> for CliError {
    fn from(err: EigenError) -> Self {
        match &err {
            EigenError::RequiresP2(_) => CliError::usage(err.to_string()),
            EigenError::ZeroSeed
            | EigenError::InvalidExponent(_)
            | EigenError::NonpositiveLambda(_) => CliError::validation(err.to_string()),
            EigenError::Nonconvergence { .. } => {
                CliError::new("nonconvergence", EXIT_SOLVER, err.to_string())
            }
            _ => CliError::new("solver-failure", EXIT_SOLVER, err.to_string()),
        }
    }
}

impl From<IcError> for CliError {
    fn from(err: IcError) -> Self {
        match err {
            IcError::Eigen(e) => e.into(),
            IcError::Io(e) => e.into(),
            other => CliError::validation(other.to_string()),
        }
    }
}

impl From<StepError> for CliError {
    fn from(err: StepError) -> Self {
        CliError::validation(err.to_string())
    }
}

impl From<crate::grid::GridError> for CliError {
    fn from(err: crate::grid::GridError) -> Self {
        CliError::validation(err.to_string())
    }
}

fn fs_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::new("io", EXIT_IO, format!("{}: {e}", path.display()))
}

/// Entry point used by `main`; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    EXIT_OK
                }
                _ => {
                    eprintln!("error: usage");
                    eprintln!("{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {}", err.code);
            for line in err.message.lines() {
                eprintln!("{line}");
            }
            err.exit
        }
    }
}

pub fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Flow(args) => cmd_flow(args),
        Command::Eigen(args) => cmd_eigen(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

/// Thread-pool setup: `--deterministic` forces one worker; otherwise
/// `FRACFLOW_THREADS` caps the pool. Later calls are no-ops, which is fine:
/// the first configuration wins for the process lifetime.
fn init_threads(deterministic: bool) {
    let threads = if deterministic {
        Some(1)
    } else {
        std::env::var("FRACFLOW_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
    };
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn out_dir(cfg: &RunConfig, args: &RunArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| cfg.out_dir.clone())
}

fn base_manifest(cfg: &RunConfig, command: &str) -> Manifest {
    let mut m = Manifest::default();
    m.set("command", command);
    m.set_f64("domain.a", cfg.a);
    m.set_f64("domain.b", cfg.b);
    m.set("domain.n", cfg.n.to_string());
    m.set_f64("physics.p", cfg.p);
    m.set_f64("physics.s", cfg.s);
    m.set_f64("time.T", cfg.t_horizon);
    m.set("time.N", cfg.n_steps.to_string());
    m.set_f64("time.tau", cfg.tau);
    m.set_f64("solver.step_tol", cfg.step_tol);
    m.set("solver.max_inner_iter", cfg.max_inner_iter.to_string());
    m.set_f64("solver.conv_tol", cfg.conv_tol);
    m.set("ic.shape", cfg.ic.to_string());
    m.set("output.state_stride", cfg.state_stride.to_string());
    m
}

fn state_file_name(step: usize) -> String {
    format!("state_{step:06}.txt")
}

// --- flow ---------------------------------------------------------------

fn cmd_flow(args: &RunArgs) -> Result<(), CliError> {
    init_threads(args.deterministic);
    let cfg = parse_config(&args.config)?;
    let dir = out_dir(&cfg, args);
    std::fs::create_dir_all(&dir).map_err(fs_err(&dir))?;

    let grid = Arc::new(cfg.build_grid()?);
    let g = resolve_ic(&cfg, &grid)?;
    let params = cfg.flow_params();
    let run = run_flow(&g, &params)?;

    let mut manifest = base_manifest(&cfg, "flow");
    write_trace_csv(&dir.join("trace.csv"), &run.trace)?;
    manifest.add_artifact("trace", "trace.csv");

    let last = run.states.len() - 1;
    for (k, state) in run.states.iter().enumerate() {
        if k % cfg.state_stride != 0 && k != last {
            continue;
        }
        let name = state_file_name(k);
        write_snapshot(&dir.join(&name), state, k as f64 * cfg.tau)?;
        manifest.add_artifact("state", &name);
    }

    manifest.status = if run.stall.is_some() {
        "partial".into()
    } else {
        "complete".into()
    };
    if let Some(stall) = &run.stall {
        manifest.set("stall.step", stall.step.to_string());
        manifest.set_f64("stall.residual", stall.residual);
    }
    write_manifest(&dir.join("manifest.txt"), &manifest)?;

    let final_row = run.trace.rows.last().expect("trace has at least row 0");
    println!("steps = {}", run.states.len() - 1);
    println!("final_time = {}", fmt_f64(final_row.time));
    println!("final_energy = {}", fmt_f64(final_row.energy));
    println!("final_sup = {}", fmt_f64(final_row.sup_norm));
    println!("status = {}", manifest.status);

    if let Some(stall) = &run.stall {
        return Err(CliError::new(
            "solver-stall",
            EXIT_SOLVER,
            format!(
                "inner solver stalled at step {} with residual {:.3e}; \
                 partial artifacts written to {}",
                stall.step,
                stall.residual,
                dir.display()
            ),
        ));
    }
    Ok(())
}

// --- eigen --------------------------------------------------------------

fn cmd_eigen(args: &EigenArgs) -> Result<(), CliError> {
    init_threads(args.run.deterministic);
    let cfg = parse_config(&args.run.config)?;
    let dir = out_dir(&cfg, &args.run);
    std::fs::create_dir_all(&dir).map_err(fs_err(&dir))?;
    let grid = Arc::new(cfg.build_grid()?);

    if args.method == MethodArg::OracleP2 && cfg.p != 2.0 {
        return Err(CliError::usage(format!(
            "--method oracle-p2 requires p = 2, config has p = {}",
            cfg.p
        )));
    }

    let result = match args.method {
        MethodArg::OracleP2 => dense_p2_oracle(&grid),
        MethodArg::Direct => {
            let seed = resolve_ic(&cfg, &grid)?;
            ground_state_direct(&grid, &seed, cfg.conv_tol)
        }
        MethodArg::Flow => {
            let g = resolve_ic(&cfg, &grid)?;
            let params = cfg.flow_params();
            ground_state_flow(&g, &params, cfg.conv_tol)
        }
    };

    let (gs, failure) = match result {
        Ok(gs) => (gs, None),
        Err(EigenError::Nonconvergence { iterations, best }) => {
            let msg = format!(
                "eigensolver did not converge after {iterations} iterations; \
                 best iterate (residual {:.3e}) written to {}",
                best.residual,
                dir.display()
            );
            (*best, Some(msg))
        }
        Err(other) => return Err(other.into()),
    };

    let mut manifest = base_manifest(&cfg, "eigen");
    manifest.set("eigen.method", gs.method.to_string());
    write_snapshot(&dir.join("ground_state.txt"), &gs.psi, 0.0)?;
    manifest.add_artifact("ground-state", "ground_state.txt");

    let summary = format!(
        "method = {}\nlambda = {}\nmu = {}\nresidual = {}\niterations = {}\n",
        gs.method,
        fmt_f64(gs.lambda),
        fmt_f64(gs.mu),
        fmt_f64(gs.residual),
        gs.iterations,
    );
    crate::io::atomic_write(&dir.join("eigen_summary.txt"), &summary)?;
    manifest.add_artifact("summary", "eigen_summary.txt");

    manifest.status = if failure.is_some() {
        "partial".into()
    } else {
        "complete".into()
    };
    write_manifest(&dir.join("manifest.txt"), &manifest)?;

    print!("{summary}");
    println!("status = {}", manifest.status);

    match failure {
        Some(msg) => Err(CliError::new("nonconvergence", EXIT_SOLVER, msg)),
        None => Ok(()),
    }
}

// --- diagnose -----------------------------------------------------------

fn cmd_diagnose(args: &RunArgs) -> Result<(), CliError> {
    init_threads(args.deterministic);
    let cfg = parse_config(&args.config)?;
    let dir = out_dir(&cfg, args);
    let manifest_path = dir.join("manifest.txt");
    let manifest = read_manifest(&manifest_path)?;
    check_manifest_matches_config(&manifest, &cfg, &manifest_path)?;

    let grid = Arc::new(cfg.build_grid()?);
    let params = cfg.flow_params();

    let trace_rel = manifest
        .artifacts_of_kind("trace")
        .next()
        .ok_or_else(|| IoError::MissingArtifact {
            path: dir.join("trace.csv"),
        })?;
    let trace = read_trace_csv(&dir.join(trace_rel), cfg.p, cfg.tau, cfg.n)?;
    if trace.rows.is_empty() {
        return Err(CliError::new(
            "parse",
            EXIT_IO,
            format!("{}: trace has no rows", dir.join(trace_rel).display()),
        ));
    }

    // (step index, state) for each stored snapshot, in step order.
    let mut states: Vec<(usize, Field)> = Vec::new();
    for rel in manifest.artifacts_of_kind("state") {
        let path = dir.join(rel);
        let snap = read_snapshot(&path)?;
        if snap.n != grid.n() || snap.p != grid.p() || snap.s != grid.s() {
            return Err(CliError::new(
                "parse",
                EXIT_IO,
                format!("{}: snapshot grid does not match the manifest", path.display()),
            ));
        }
        let k = (snap.t / cfg.tau).round() as usize;
        let field = Field::new(grid.clone(), snap.values)
            .map_err(|e| CliError::new("parse", EXIT_IO, format!("{}: {e}", path.display())))?;
        states.push((k, field));
    }
    states.sort_by_key(|(k, _)| *k);

    let mut checks: Vec<(CheckReport, bool)> = Vec::new();

    // Trace-only required checks.
    checks.push((check_energy_identity(&trace, cfg.step_tol), true));
    checks.push((check_rayleigh_monotone(&trace, RAYLEIGH_SLACK), true));
    checks.push((
        check_sup_monotone(&trace, ordering_slack(cfg.step_tol)),
        true,
    ));

    // The remaining checks compare against the grid's own ground state.
    match diagnose_ground_state(&cfg, &grid) {
        Ok(gs) => {
            let e0 = trace.rows[0].energy;
            let slack = weighted_slack(
                cfg.p,
                e0,
                gs.mu,
                cfg.tau,
                cfg.n,
                cfg.step_tol,
                trace.initial_sup(),
            );
            checks.push((check_weighted_seminorm(&trace, gs.mu, slack), true));
            checks.push((decay_fit_report(&trace, gs.mu, cfg.tau), false));
            if !states.is_empty() {
                checks.push(barrier_report(&states, &gs, cfg.step_tol));
                let fields: Vec<Field> = states.iter().map(|(_, f)| f.clone()).collect();
                checks.push((
                    check_large_time_limit(&fields, &trace, &gs, LARGE_TIME_TOL),
                    false,
                ));
            }
        }
        Err(err) => {
            checks.push((
                error_report(
                    "ground-state",
                    format!("checks needing the ground state were skipped: {err}"),
                ),
                false,
            ));
        }
    }

    if !states.is_empty() {
        checks.push(holder_report(&states, &params, &grid, &trace));
    }

    write_checks_csv(&dir.join("checks.csv"), &checks)?;
    let mut summary = String::new();
    for (report, required) in &checks {
        let line = format!(
            "check {}: {} (worst {} vs budget {}{}){}{}\n",
            report.name,
            if report.passed { "pass" } else { "FAIL" },
            fmt_f64(report.worst_violation),
            fmt_f64(report.slack_budget),
            report
                .location
                .as_deref()
                .map(|l| format!("; at {l}"))
                .unwrap_or_default(),
            if *required { "" } else { " [informational]" },
            report
                .detail
                .as_deref()
                .map(|d| format!(" -- {d}"))
                .unwrap_or_default(),
        );
        print!("{line}");
        summary.push_str(&line);
    }
    crate::io::atomic_write(&dir.join("diagnose_summary.txt"), &summary)?;

    let failed: Vec<&str> = checks
        .iter()
        .filter(|(r, required)| *required && !r.passed)
        .map(|(r, _)| r.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::new(
            "check-failed",
            EXIT_SOLVER,
            format!("required checks failed: {}", failed.join(", ")),
        ))
    }
}

fn check_manifest_matches_config(
    manifest: &Manifest,
    cfg: &RunConfig,
    path: &Path,
) -> Result<(), CliError> {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs().max(y.abs()));
    let pairs = [
        ("domain.a", cfg.a),
        ("domain.b", cfg.b),
        ("physics.p", cfg.p),
        ("physics.s", cfg.s),
        ("time.tau", cfg.tau),
    ];
    for (key, want) in pairs {
        let got = manifest.get_f64(key, path)?;
        if !close(got, want) {
            return Err(CliError::validation(format!(
                "config does not match the artifacts: {key} is {got} in the manifest, {want} in the config"
            )));
        }
    }
    let got_n = manifest.get_usize("domain.n", path)?;
    if got_n != cfg.n {
        return Err(CliError::validation(format!(
            "config does not match the artifacts: domain.n is {got_n} in the manifest, {} in the config",
            cfg.n
        )));
    }
    Ok(())
}

/// Ground state used by the diagnose checks: the dense route for p = 2,
/// otherwise the direct descent seeded with the default centered bump.
fn diagnose_ground_state(cfg: &RunConfig, grid: &Arc<Grid1D>) -> Result<GroundState, EigenError> {
    if cfg.p == 2.0 {
        dense_p2_oracle(grid)
    } else {
        let seed = Field::from_fn(grid.clone(), |x| {
            crate::config::bump_profile(x, 0.5 * (cfg.a + cfg.b), 0.25 * (cfg.b - cfg.a), 1.0)
        })?;
        ground_state_direct(grid, &seed, cfg.conv_tol)
    }
}

/// Informational row for a check that could not run at all.
fn error_report(name: &str, detail: String) -> CheckReport {
    CheckReport {
        name: name.into(),
        passed: false,
        worst_violation: f64::INFINITY,
        slack_budget: 0.0,
        location: None,
        detail: Some(detail),
    }
}

/// Compares the decay rate fitted from the trace tail against the scheme's
/// own per-step rate ln(1 + μτ)/τ. Comparing against the continuum rate μ
/// directly would bake in the known O(μ²τ/2) discretization bias and fail
/// coarse-in-time runs that behave exactly as designed.
fn decay_fit_report(trace: &FlowTrace, mu: f64, tau: f64) -> CheckReport {
    let t_end = trace.rows.last().map_or(0.0, |r| r.time);
    let scheme_rate = (1.0 + mu * tau).ln() / tau;
    match fit_decay_rate(trace, (0.5 * t_end, t_end)) {
        Ok(fit) => {
            let rel = (fit - scheme_rate).abs() / scheme_rate;
            CheckReport {
                name: "decay-fit".into(),
                passed: rel <= DECAY_FIT_BUDGET,
                worst_violation: rel,
                slack_budget: DECAY_FIT_BUDGET,
                location: None,
                detail: Some(format!(
                    "fitted mu {fit:.6e}, scheme rate {scheme_rate:.6e}, grid mu {mu:.6e}"
                )),
            }
        }
        Err(err) => error_report("decay-fit", err.to_string()),
    }
}

/// Scales the ground state to dominate |v^0| and checks it stays a barrier.
/// The 1 + 1e-12 margin keeps the exact t = 0 precondition safe from the
/// rounding of the quotient max.
fn barrier_report(states: &[(usize, Field)], gs: &GroundState, step_tol: f64) -> (CheckReport, bool) {
    let g = &states[0].1;
    let mut c = 0.0f64;
    for (&gi, &qi) in g.values().iter().zip(gs.psi.values()) {
        if qi > 0.0 {
            c = c.max(gi.abs() / qi);
        } else if gi.abs() > 0.0 {
            return (
                error_report(
                    "barrier",
                    format!(
                        "initial state is nonzero where the ground state vanishes (cell value {gi})"
                    ),
                ),
                false,
            );
        }
    }
    let psi_scaled = gs.psi.scale(c * (1.0 + 1e-12));
    let fields: Vec<Field> = states.iter().map(|(_, f)| f.clone()).collect();
    match check_barrier(&fields, &psi_scaled, ordering_slack(step_tol)) {
        Ok(report) => (report, true),
        Err(err) => (error_report("barrier", err.to_string()), false),
    }
}

/// Oscillation-decay estimate on auto-chosen cylinders. Needs a uniformly
/// strided state series; the effective step of the stored sequence is
/// stride·tau.
fn holder_report(
    states: &[(usize, Field)],
    params: &FlowParams,
    grid: &Grid1D,
    trace: &FlowTrace,
) -> (CheckReport, bool) {
    let info = |detail: String| (error_report("holder-alpha", detail), false);
    if states.len() < 4 {
        return info(format!("only {} stored states", states.len()));
    }
    let stride = states[1].0 - states[0].0;
    if stride == 0 || !states.windows(2).all(|w| w[1].0 - w[0].0 == stride) {
        return info("stored states are not uniformly strided".into());
    }
    let eff_tau = params.tau * stride as f64;
    let eff_params = FlowParams {
        tau: eff_tau,
        n_steps: states.len() - 1,
        t_horizon: eff_tau * (states.len() - 1) as f64,
        method: InnerMethod::Auto,
        ..params.clone()
    };
    let fields: Vec<Field> = states.iter().map(|(_, f)| f.clone()).collect();

    let t_end = trace.rows.last().map_or(0.0, |r| r.time);
    let (a, b) = (grid.a(), grid.b());
    let width = b - a;
    let gamma = grid.s() * grid.p() / (grid.p() - 1.0);
    // Radius: small enough that the deepest window is inside (0, t_end] and
    // the spatial ball stays inside the interval.
    let mut r = 0.15 * width;
    if r.powf(gamma) > 0.9 * t_end {
        r = (0.9 * t_end).powf(1.0 / gamma);
    }
    if !(r >= 0.5 * grid.h()) {
        return info("no usable cylinder radius for this run".into());
    }
    // Levels: the deepest window must still hold 3 stored steps, and the
    // deepest ball must still reach a cell center (radius at least h/2).
    let mut levels = 0u32;
    while levels < 3 {
        let next_r = r * 0.5f64.powi(levels as i32 + 1);
        if next_r.powf(gamma) < 3.5 * eff_tau || next_r < 0.5 * grid.h() {
            break;
        }
        levels += 1;
    }
    if levels == 0 {
        return info(format!(
            "stored time resolution {eff_tau:.3e} too coarse for dyadic refinement"
        ));
    }
    let cylinders: Result<Vec<Cylinder>, _> = [0.35, 0.5, 0.65]
        .iter()
        .map(|&f| Cylinder::new(a + f * width, t_end, r, grid.s(), grid.p()))
        .collect();
    let cylinders = match cylinders {
        Ok(c) => c,
        Err(e) => return info(e.to_string()),
    };

    match estimate_holder(&fields, &eff_params, &cylinders, levels) {
        Ok(est) => {
            let table = est
                .table
                .iter()
                .map(|row| {
                    format!(
                        "x0 = {:.4}: osc {}",
                        row.x0,
                        row.oscillations
                            .iter()
                            .map(|o| format!("{o:.3e}"))
                            .collect::<Vec<_>>()
                            .join(" > ")
                    )
                })
                .collect::<Vec<_>>()
                .join("; ");
            match est.alpha_fit {
                Some(alpha) => (
                    CheckReport {
                        name: "holder-alpha".into(),
                        passed: -alpha <= 0.0,
                        worst_violation: -alpha,
                        slack_budget: 0.0,
                        location: None,
                        detail: Some(format!("alpha_fit = {alpha:.4}; {table}")),
                    },
                    false,
                ),
                None => (
                    CheckReport {
                        name: "holder-alpha".into(),
                        passed: true,
                        worst_violation: 0.0,
                        slack_budget: 0.0,
                        location: None,
                        detail: Some(format!("all oscillations vanish (zero flow); {table}")),
                    },
                    false,
                ),
            }
        }
        Err(err @ DiagError::InsufficientTimeResolution { .. })
        | Err(err @ DiagError::CylinderOutsideDomain { .. }) => info(err.to_string()),
        Err(err) => info(err.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn method_arg_values() {
        assert_eq!(
            MethodArg::from_str("oracle-p2", true).unwrap(),
            MethodArg::OracleP2
        );
        assert_eq!(MethodArg::from_str("flow", true).unwrap(), MethodArg::Flow);
        assert_eq!(
            MethodArg::from_str("direct", true).unwrap(),
            MethodArg::Direct
        );
    }

    #[test]
    fn parses_flow_invocation() {
        let cli = Cli::try_parse_from([
            "fracflow",
            "flow",
            "--config",
            "run.cfg",
            "--out",
            "results",
            "--deterministic",
        ])
        .unwrap();
        match cli.command {
            Command::Flow(args) => {
                assert_eq!(args.config, PathBuf::from("run.cfg"));
                assert_eq!(args.out, Some(PathBuf::from("results")));
                assert!(args.deterministic);
            }
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn eigen_method_defaults_to_direct() {
        let cli = Cli::try_parse_from(["fracflow", "eigen", "--config", "run.cfg"]).unwrap();
        match cli.command {
            Command::Eigen(args) => assert_eq!(args.method, MethodArg::Direct),
            _ => panic!("wrong subcommand"),
        }
    }
}
