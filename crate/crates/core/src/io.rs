//! On-disk artifact formats. Everything is plain text:
//!
//! * trace CSV: header `k,t,energy,mass,rayleigh,dissipation,inner_residual,sup_norm`,
//!   one row per stored step, floats at 17 significant digits so they
//!   round-trip exactly;
//! * state snapshot: header line `n a b p s t`, then n cell values, one per
//!   line;
//! * run manifest: version line `fracflow-manifest-v1`, then flat
//!   `key = value` lines (status, command, the run parameters) and one
//!   `artifact = <kind> <relative-path>` line per written file;
//! * check-report CSV for diagnostics.
//!
//! All writers go through [`atomic_write`]: content lands in a sibling
//! `*.tmp` file first and is renamed into place, so a crash never leaves a
//! half-written artifact under the final name.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::CheckReport;
use crate::field::Field;
use crate::stepper::{FlowTrace, TraceRow};

pub const MANIFEST_VERSION: &str = "fracflow-manifest-v1";
pub const TRACE_HEADER: &str = "k,t,energy,mass,rayleigh,dissipation,inner_residual,sup_norm";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: first line `{found}` is not `{MANIFEST_VERSION}`")]
    VersionMismatch { path: PathBuf, found: String },
    #[error("missing artifact: {path}")]
    MissingArtifact { path: PathBuf },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// 17 significant digits: enough that `f64::from_str` recovers the exact bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), IoError> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    std::fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    std::fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(())
}

// --- trace CSV ------------------------------------------------------------

pub fn render_trace_csv(trace: &FlowTrace) -> String {
    let mut out = String::with_capacity(96 * (trace.rows.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.step,
            fmt_f64(row.time),
            fmt_f64(row.energy),
            fmt_f64(row.mass),
            fmt_f64(row.rayleigh),
            fmt_f64(row.dissipation),
            fmt_f64(row.inner_residual),
            fmt_f64(row.sup_norm),
        ));
    }
    out
}

pub fn write_trace_csv(path: &Path, trace: &FlowTrace) -> Result<(), IoError> {
    atomic_write(path, &render_trace_csv(trace))
}

/// Reads a trace CSV back. The scalar run parameters `p`, `tau`, `n_cells`
/// are not stored in the CSV; they come from the manifest.
pub fn read_trace_csv(path: &Path, p: f64, tau: f64, n_cells: usize) -> Result<FlowTrace, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRACE_HEADER => {}
        Some((_, header)) => {
            return Err(parse_err(path, 1, format!("unexpected header `{header}`")))
        }
        None => return Err(parse_err(path, 1, "empty trace file")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 8 fields, got {}", fields.len()),
            ));
        }
        let step: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad step index `{}`", fields[0])))?;
        let mut nums = [0.0f64; 7];
        for (slot, raw) in nums.iter_mut().zip(&fields[1..]) {
            *slot = raw
                .trim()
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad number `{raw}`")))?;
        }
        rows.push(TraceRow {
            step,
            time: nums[0],
            energy: nums[1],
            mass: nums[2],
            rayleigh: nums[3],
            dissipation: nums[4],
            inner_residual: nums[5],
            sup_norm: nums[6],
        });
    }
    Ok(FlowTrace {
        p,
        tau,
        n_cells,
        rows,
    })
}

// --- state snapshots --------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub s: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

pub fn render_snapshot(field: &Field, t: f64) -> String {
    let g = field.grid();
    let mut out = String::with_capacity(24 * (field.values().len() + 1));
    out.push_str(&format!(
        "{} {} {} {} {} {}\n",
        g.n(),
        fmt_f64(g.a()),
        fmt_f64(g.b()),
        fmt_f64(g.p()),
        fmt_f64(g.s()),
        fmt_f64(t),
    ));
    for v in field.values() {
        out.push_str(&fmt_f64(*v));
        out.push('\n');
    }
    out
}

pub fn write_snapshot(path: &Path, field: &Field, t: f64) -> Result<(), IoError> {
    atomic_write(path, &render_snapshot(field, t))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, IoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty snapshot file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() != 6 {
        return Err(parse_err(
            path,
            1,
            format!("header must be `n a b p s t`, got {} fields", tokens.len()),
        ));
    }
    let n: usize = tokens[0]
        .parse()
        .map_err(|_| parse_err(path, 1, format!("bad cell count `{}`", tokens[0])))?;
    let mut header_nums = [0.0f64; 5];
    for (slot, raw) in header_nums.iter_mut().zip(&tokens[1..]) {
        *slot = raw
            .parse()
            .map_err(|_| parse_err(path, 1, format!("bad number `{raw}`")))?;
    }
    let mut values = Vec::with_capacity(n);
    for (idx, line) in lines {
        for raw in line.split_whitespace() {
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, idx + 1, format!("bad value `{raw}`")))?;
            values.push(v);
        }
    }
    if values.len() != n {
        return Err(parse_err(
            path,
            1,
            format!("header promises {n} values, file has {}", values.len()),
        ));
    }
    Ok(Snapshot {
        n,
        a: header_nums[0],
        b: header_nums[1],
        p: header_nums[2],
        s: header_nums[3],
        t: header_nums[4],
        values,
    })
}

// --- run manifest -----------------------------------------------------------

/// Index of one run directory: status, flat key/value metadata, and the list
/// of artifacts as (kind, relative path) pairs in write order.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub status: String,
    pub entries: BTreeMap<String, String>,
    pub artifacts: Vec<(String, String)>,
}

impl Manifest {
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, fmt_f64(value));
    }

    pub fn add_artifact(&mut self, kind: &str, rel_path: &str) {
        self.artifacts.push((kind.to_string(), rel_path.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str, path: &Path) -> Result<f64, IoError> {
        self.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(path, 0, format!("manifest key `{key}` missing or not a number")))
    }

    pub fn get_usize(&self, key: &str, path: &Path) -> Result<usize, IoError> {
        self.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err(path, 0, format!("manifest key `{key}` missing or not an integer")))
    }

    pub fn artifacts_of_kind<'a>(&'a self, kind: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.artifacts
            .iter()
            .filter(move |(k, _)| k == kind)
            .map(|(_, p)| p.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(MANIFEST_VERSION);
        out.push('\n');
        out.push_str(&format!("status = {}\n", self.status));
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        for (kind, path) in &self.artifacts {
            out.push_str(&format!("artifact = {kind} {path}\n"));
        }
        out
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<(), IoError> {
    atomic_write(path, &manifest.render())
}

pub fn read_manifest(path: &Path) -> Result<Manifest, IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            IoError::MissingArtifact {
                path: path.to_path_buf(),
            }
        } else {
            IoError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == MANIFEST_VERSION => {}
        Some((_, first)) => {
            return Err(IoError::VersionMismatch {
                path: path.to_path_buf(),
                found: first.trim().to_string(),
            })
        }
        None => {
            return Err(IoError::VersionMismatch {
                path: path.to_path_buf(),
                found: String::new(),
            })
        }
    }
    let mut manifest = Manifest::default();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some(eq) = trimmed.find('=') else {
            return Err(parse_err(path, lineno, format!("expected `key = value`, got `{trimmed}`")));
        };
        let key = trimmed[..eq].trim();
        let value = trimmed[eq + 1..].trim();
        match key {
            "status" => manifest.status = value.to_string(),
            "artifact" => {
                let Some((kind, rel)) = value.split_once(' ') else {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("artifact line needs `<kind> <path>`, got `{value}`"),
                    ));
                };
                manifest.add_artifact(kind.trim(), rel.trim());
            }
            other => {
                manifest.set(other, value);
            }
        }
    }
    Ok(manifest)
}

// --- check reports ------------------------------------------------------------

pub const CHECKS_HEADER: &str = "name,required,passed,worst_violation,slack_budget,location,detail";

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Renders check reports as CSV. `required` marks checks whose failure should
/// fail the run (informational rows carry `false`).
pub fn render_checks_csv(reports: &[(CheckReport, bool)]) -> String {
    let mut out = String::new();
    out.push_str(CHECKS_HEADER);
    out.push('\n');
    for (r, required) in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_quote(&r.name),
            required,
            r.passed,
            fmt_f64(r.worst_violation),
            fmt_f64(r.slack_budget),
            csv_quote(r.location.as_deref().unwrap_or("")),
            csv_quote(r.detail.as_deref().unwrap_or("")),
        ));
    }
    out
}

pub fn write_checks_csv(path: &Path, reports: &[(CheckReport, bool)]) -> Result<(), IoError> {
    atomic_write(path, &render_checks_csv(reports))
}
