//! Run configuration: a flat, line-oriented `section.key = value` text
//! format, a validating parser that reports every problem at once, and the
//! named initial-condition shapes.
//!
//! Grammar (one setting per line; `#` starts a full-line comment):
//!
//! ```text
//! domain.a = 0.0          # left endpoint
//! domain.b = 1.0          # right endpoint (a < b)
//! domain.n = 64           # cell count (≥ 3)
//! physics.p = 2.0         # exponent (> 1; guarantees stated for ≥ 2)
//! physics.s = 0.5         # fractional order in (0,1)
//! time.T = 1.0            # horizon (> 0)
//! time.N = 400            # step count; or time.tau (exactly one of the two)
//! solver.step_tol = 1e-10       # default 1e-10 for p = 2, else 1e-8
//! solver.max_inner_iter = 500   # default 500
//! solver.conv_tol = 1e-8        # eigensolver tolerance, default 1e-8
//! ic.shape = bump(0.5, 0.25, 1.0)
//! output.dir = out        # default "."
//! output.state_stride = 1 # write every m-th state, default 1
//! ```
//!
//! Initial-condition shapes: `bump(center, width, height)` (the smooth
//! mollifier height·exp(1 − 1/(1 − t²)) with t = (x − center)/width),
//! `ground-state`, `scaled-ground-state(c)`, `two-bump(c1, w1, h1, c2, w2,
//! h2)`, and `file(path)` reading a state snapshot (path relative to the
//! config file). Without `ic.shape` the default is a bump centered in the
//! domain with width (b − a)/4 and height 1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::eigen::{dense_p2_oracle, ground_state_direct, EigenError};
use crate::field::{Field, FieldError};
use crate::grid::{Grid1D, GridError};
use crate::io::{read_snapshot, IoError};
use crate::stepper::{FlowParams, InnerMethod};

#[derive(Debug, Clone, PartialEq)]
pub enum IcSpec {
    Bump {
        center: f64,
        width: f64,
        height: f64,
    },
    GroundState,
    ScaledGroundState(f64),
    TwoBump {
        c1: f64,
        w1: f64,
        h1: f64,
        c2: f64,
        w2: f64,
        h2: f64,
    },
    File(PathBuf),
}

impl std::fmt::Display for IcSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IcSpec::Bump {
                center,
                width,
                height,
            } => write!(f, "bump({center}, {width}, {height})"),
            IcSpec::GroundState => write!(f, "ground-state"),
            IcSpec::ScaledGroundState(c) => write!(f, "scaled-ground-state({c})"),
            IcSpec::TwoBump {
                c1,
                w1,
                h1,
                c2,
                w2,
                h2,
            } => write!(f, "two-bump({c1}, {w1}, {h1}, {c2}, {w2}, {h2})"),
            IcSpec::File(path) => write!(f, "file({})", path.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub p: f64,
    pub s: f64,
    pub t_horizon: f64,
    pub n_steps: usize,
    pub tau: f64,
    pub step_tol: f64,
    pub max_inner_iter: usize,
    pub conv_tol: f64,
    pub ic: IcSpec,
    pub out_dir: PathBuf,
    pub state_stride: usize,
}

/// One problem found while parsing or validating a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l} ({k}): {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}", issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { issues: Vec<ConfigIssue> },
}

/// Errors raised while turning an [`IcSpec`] into a concrete field.
#[derive(Debug, Error)]
pub enum IcError {
    #[error("ground-state initial condition failed: {0}")]
    Eigen(#[from] EigenError),
    #[error("snapshot initial condition failed: {0}")]
    Io(#[from] IoError),
    #[error(
        "snapshot grid (n = {got_n}, [{got_a}, {got_b}], s = {got_s}, p = {got_p}) \
         does not match the configured grid"
    )]
    SnapshotGridMismatch {
        got_n: usize,
        got_a: f64,
        got_b: f64,
        got_s: f64,
        got_p: f64,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parses config text. `base_dir` anchors relative `file(...)` paths.
/// Every parse and validation problem is collected; the error lists all of
/// them, not just the first.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let mut issues: Vec<ConfigIssue> = Vec::new();
    let mut raw: BTreeMap<String, (usize, String)> = BTreeMap::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            issues.push(ConfigIssue {
                line: Some(lineno),
                key: None,
                message: "expected `section.key = value`".into(),
            });
            continue;
        };
        let key = trimmed[..eq].trim().to_string();
        let value = trimmed[eq + 1..].trim().to_string();
        if key.is_empty() || value.is_empty() {
            issues.push(ConfigIssue {
                line: Some(lineno),
                key: Some(key),
                message: "empty key or value".into(),
            });
            continue;
        }
        if !KNOWN_KEYS.contains(&key.as_str()) {
            issues.push(ConfigIssue {
                line: Some(lineno),
                key: Some(key.clone()),
                message: "unknown key".into(),
            });
            continue;
        }
        if let Some((first_line, _)) = raw.get(&key) {
            issues.push(ConfigIssue {
                line: Some(lineno),
                key: Some(key.clone()),
                message: format!("duplicate key (first set on line {first_line})"),
            });
            continue;
        }
        raw.insert(key, (lineno, value));
    }

    let take_f64 = |key: &str, issues: &mut Vec<ConfigIssue>| -> Option<(usize, f64)> {
        raw.get(key).and_then(|(line, v)| match v.parse::<f64>() {
            Ok(x) => Some((*line, x)),
            Err(_) => {
                issues.push(ConfigIssue {
                    line: Some(*line),
                    key: Some(key.into()),
                    message: format!("`{v}` is not a number"),
                });
                None
            }
        })
    };
    let require = |key: &str, issues: &mut Vec<ConfigIssue>| {
        issues.push(ConfigIssue {
            line: None,
            key: Some(key.into()),
            message: "required key missing".into(),
        });
    };

    let a = take_f64("domain.a", &mut issues);
    let b = take_f64("domain.b", &mut issues);
    let p = take_f64("physics.p", &mut issues);
    let s = take_f64("physics.s", &mut issues);
    let t_h = take_f64("time.T", &mut issues);
    let n_opt = take_f64("time.N", &mut issues);
    let tau_opt = take_f64("time.tau", &mut issues);
    let step_tol = take_f64("solver.step_tol", &mut issues);
    let max_inner = take_f64("solver.max_inner_iter", &mut issues);
    let conv_tol = take_f64("solver.conv_tol", &mut issues);
    let n_cells = take_f64("domain.n", &mut issues);
    let stride = take_f64("output.state_stride", &mut issues);

    if !raw.contains_key("domain.a") {
        require("domain.a", &mut issues);
    }
    if !raw.contains_key("domain.b") {
        require("domain.b", &mut issues);
    }
    if !raw.contains_key("domain.n") {
        require("domain.n", &mut issues);
    }
    if !raw.contains_key("physics.p") {
        require("physics.p", &mut issues);
    }
    if !raw.contains_key("physics.s") {
        require("physics.s", &mut issues);
    }
    if !raw.contains_key("time.T") {
        require("time.T", &mut issues);
    }

    let mut push = |key: &str, line: Option<usize>, message: String| {
        issues.push(ConfigIssue {
            line,
            key: Some(key.into()),
            message,
        });
    };

    if let (Some((_, a)), Some((lb, b))) = (a, b) {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            push("domain.b", Some(lb), format!("need a < b, got [{a}, {b}]"));
        }
    }
    let n = n_cells.and_then(|(line, x)| {
        if x.fract() == 0.0 && x >= 3.0 && x <= 1e9 {
            Some(x as usize)
        } else {
            push("domain.n", Some(line), format!("n must be an integer ≥ 3, got {x}"));
            None
        }
    });
    if let Some((line, s)) = s {
        if !(s > 0.0 && s < 1.0) {
            push("physics.s", Some(line), "s must lie in (0,1)".into());
        }
    }
    if let Some((line, p)) = p {
        if !(p > 1.0) || !p.is_finite() {
            push("physics.p", Some(line), format!("p must exceed 1, got {p}"));
        }
    }
    if let Some((line, t)) = t_h {
        if !(t > 0.0) || !t.is_finite() {
            push("time.T", Some(line), format!("T must be positive, got {t}"));
        }
    }

    // Exactly one of time.N and time.tau.
    let mut n_steps_tau: Option<(usize, f64)> = None;
    match (n_opt, tau_opt, t_h) {
        (Some((ln, _)), Some(_), _) => {
            push("time.N", Some(ln), "give exactly one of time.N and time.tau, not both".into());
        }
        (None, None, _) => {
            if raw.contains_key("time.T") {
                push("time.N", None, "one of time.N or time.tau is required".into());
            }
        }
        (Some((line, nn)), None, Some((_, t))) if t > 0.0 => {
            if nn.fract() == 0.0 && nn >= 1.0 && nn <= 1e9 {
                let k = nn as usize;
                n_steps_tau = Some((k, t / k as f64));
            } else {
                push("time.N", Some(line), format!("N must be an integer ≥ 1, got {nn}"));
            }
        }
        (None, Some((line, tau)), Some((_, t))) if t > 0.0 => {
            if tau > 0.0 && tau.is_finite() {
                let ratio = t / tau;
                let k = ratio.round();
                if k >= 1.0 && (ratio - k).abs() <= 1e-9 * (1.0 + ratio) {
                    n_steps_tau = Some((k as usize, t / k));
                } else {
                    push(
                        "time.tau",
                        Some(line),
                        format!("T/tau = {ratio} is not a whole number of steps"),
                    );
                }
            } else {
                push("time.tau", Some(line), format!("tau must be positive, got {tau}"));
            }
        }
        _ => {}
    }

    if let Some((line, x)) = step_tol {
        if !(x > 0.0) {
            push("solver.step_tol", Some(line), format!("must be positive, got {x}"));
        }
    }
    if let Some((line, x)) = conv_tol {
        if !(x > 0.0) {
            push("solver.conv_tol", Some(line), format!("must be positive, got {x}"));
        }
    }
    let max_inner_iter = match max_inner {
        Some((line, x)) => {
            if x.fract() == 0.0 && x >= 1.0 && x <= 1e9 {
                x as usize
            } else {
                push(
                    "solver.max_inner_iter",
                    Some(line),
                    format!("must be an integer ≥ 1, got {x}"),
                );
                0
            }
        }
        None => FlowParams::DEFAULT_MAX_INNER_ITER,
    };
    let state_stride = match stride {
        Some((line, x)) => {
            if x.fract() == 0.0 && x >= 1.0 && x <= 1e9 {
                x as usize
            } else {
                push(
                    "output.state_stride",
                    Some(line),
                    format!("must be an integer ≥ 1, got {x}"),
                );
                0
            }
        }
        None => 1,
    };

    let ic = match raw.get("ic.shape") {
        Some((line, v)) => parse_ic(v, *line, base_dir, &mut issues),
        None => match (a, b) {
            (Some((_, a)), Some((_, b))) if a < b => Some(IcSpec::Bump {
                center: 0.5 * (a + b),
                width: 0.25 * (b - a),
                height: 1.0,
            }),
            _ => None,
        },
    };

    let out_dir = raw
        .get("output.dir")
        .map(|(_, v)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("."));

    if !issues.is_empty() {
        return Err(ConfigError::Invalid { issues });
    }
    let (n_steps, tau) = n_steps_tau.expect("validated");
    let p_val = p.expect("validated").1;
    Ok(RunConfig {
        a: a.expect("validated").1,
        b: b.expect("validated").1,
        n: n.expect("validated"),
        p: p_val,
        s: s.expect("validated").1,
        t_horizon: t_h.expect("validated").1,
        n_steps,
        tau,
        step_tol: step_tol.map_or_else(|| FlowParams::default_step_tol(p_val), |(_, x)| x),
        max_inner_iter,
        conv_tol: conv_tol.map_or(1e-8, |(_, x)| x),
        ic: ic.expect("validated"),
        out_dir,
        state_stride,
    })
}

const KNOWN_KEYS: &[&str] = &[
    "domain.a",
    "domain.b",
    "domain.n",
    "physics.p",
    "physics.s",
    "time.T",
    "time.N",
    "time.tau",
    "solver.step_tol",
    "solver.max_inner_iter",
    "solver.conv_tol",
    "ic.shape",
    "output.dir",
    "output.state_stride",
];

fn parse_ic(
    value: &str,
    line: usize,
    base_dir: &Path,
    issues: &mut Vec<ConfigIssue>,
) -> Option<IcSpec> {
    let mut bad = |message: String| {
        issues.push(ConfigIssue {
            line: Some(line),
            key: Some("ic.shape".into()),
            message,
        });
        None
    };
    let (name, args) = match value.find('(') {
        Some(open) => {
            if !value.ends_with(')') {
                return bad(format!("`{value}`: missing closing parenthesis"));
            }
            let inner = &value[open + 1..value.len() - 1];
            (
                value[..open].trim(),
                inner.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>(),
            )
        }
        None => (value.trim(), Vec::new()),
    };
    let nums = |args: &[String]| -> Option<Vec<f64>> {
        args.iter().map(|a| a.parse::<f64>().ok()).collect()
    };
    match name {
        "bump" => {
            if args.len() != 3 {
                return bad("bump takes (center, width, height)".into());
            }
            let Some(v) = nums(&args) else {
                return bad(format!("bump arguments must be numbers, got {args:?}"));
            };
            if !(v[1] > 0.0) {
                return bad(format!("bump width must be positive, got {}", v[1]));
            }
            Some(IcSpec::Bump {
                center: v[0],
                width: v[1],
                height: v[2],
            })
        }
        "ground-state" => {
            if args.is_empty() {
                Some(IcSpec::GroundState)
            } else {
                bad("ground-state takes no arguments".into())
            }
        }
        "scaled-ground-state" => {
            if args.len() != 1 {
                return bad("scaled-ground-state takes (c)".into());
            }
            match args[0].parse::<f64>() {
                Ok(c) if c.is_finite() => Some(IcSpec::ScaledGroundState(c)),
                _ => bad(format!("`{}` is not a finite number", args[0])),
            }
        }
        "two-bump" => {
            if args.len() != 6 {
                return bad("two-bump takes (c1, w1, h1, c2, w2, h2)".into());
            }
            let Some(v) = nums(&args) else {
                return bad(format!("two-bump arguments must be numbers, got {args:?}"));
            };
            if !(v[1] > 0.0) || !(v[4] > 0.0) {
                return bad("two-bump widths must be positive".into());
            }
            Some(IcSpec::TwoBump {
                c1: v[0],
                w1: v[1],
                h1: v[2],
                c2: v[3],
                w2: v[4],
                h2: v[5],
            })
        }
        "file" => {
            if args.len() != 1 || args[0].is_empty() {
                return bad("file takes (path)".into());
            }
            let path = base_dir.join(&args[0]);
            if !path.exists() {
                return bad(format!("snapshot file {} does not exist", path.display()));
            }
            Some(IcSpec::File(path))
        }
        other => bad(format!("unknown shape `{other}`")),
    }
}

impl RunConfig {
    pub fn build_grid(&self) -> Result<Grid1D, GridError> {
        Grid1D::new(self.a, self.b, self.n, self.s, self.p)
    }

    pub fn flow_params(&self) -> FlowParams {
        FlowParams {
            p: self.p,
            s: self.s,
            tau: self.tau,
            t_horizon: self.t_horizon,
            n_steps: self.n_steps,
            step_tol: self.step_tol,
            max_inner_iter: self.max_inner_iter,
            method: InnerMethod::Auto,
        }
    }
}

/// The smooth compactly supported bump height·exp(1 − 1/(1 − t²)) with
/// t = (x − center)/width, zero for |t| ≥ 1; peak value is `height`.
pub fn bump_profile(x: f64, center: f64, width: f64, height: f64) -> f64 {
    let t = (x - center) / width;
    if t.abs() < 1.0 {
        height * (1.0 - 1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Materializes the configured initial condition on the grid. Ground-state
/// shapes run the eigensolver: the dense oracle for p = 2, the direct
/// quotient descent otherwise.
pub fn resolve_ic(cfg: &RunConfig, grid: &Arc<Grid1D>) -> Result<Field, IcError> {
    match &cfg.ic {
        IcSpec::Bump {
            center,
            width,
            height,
        } => Ok(Field::from_fn(grid.clone(), |x| {
            bump_profile(x, *center, *width, *height)
        })?),
        IcSpec::TwoBump {
            c1,
            w1,
            h1,
            c2,
            w2,
            h2,
        } => Ok(Field::from_fn(grid.clone(), |x| {
            bump_profile(x, *c1, *w1, *h1) + bump_profile(x, *c2, *w2, *h2)
        })?),
        IcSpec::GroundState => Ok(config_ground_state(cfg, grid)?),
        IcSpec::ScaledGroundState(c) => Ok(config_ground_state(cfg, grid)?.scale(*c)),
        IcSpec::File(path) => {
            let snap = read_snapshot(path)?;
            let matches = snap.n == grid.n()
                && (snap.a - grid.a()).abs() <= 1e-12 * (1.0 + grid.a().abs())
                && (snap.b - grid.b()).abs() <= 1e-12 * (1.0 + grid.b().abs())
                && snap.p == grid.p()
                && snap.s == grid.s();
            if !matches {
                return Err(IcError::SnapshotGridMismatch {
                    got_n: snap.n,
                    got_a: snap.a,
                    got_b: snap.b,
                    got_s: snap.s,
                    got_p: snap.p,
                });
            }
            Ok(Field::new(grid.clone(), snap.values)?)
        }
    }
}

fn config_ground_state(cfg: &RunConfig, grid: &Arc<Grid1D>) -> Result<Field, IcError> {
    if cfg.p == 2.0 {
        Ok(dense_p2_oracle(grid)?.psi)
    } else {
        let seed = Field::from_fn(grid.clone(), |x| {
            bump_profile(x, 0.5 * (cfg.a + cfg.b), 0.25 * (cfg.b - cfg.a), 1.0)
        })?;
        Ok(ground_state_direct(grid, &seed, cfg.conv_tol.min(1e-8))?.psi)
    }
}
