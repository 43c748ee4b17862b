//! Machine checks of the structural properties a computed flow must satisfy:
//! the discrete energy inequality, monotonicity of the Rayleigh quotient and
//! of the sup norm, exponential decay at the sharp rate, comparison and
//! barrier bounds, and the oscillation-decay (Hölder) estimate over
//! parabolic cylinders.
//!
//! Each check reports its worst violation against an explicit slack budget;
//! budgets are derived from the inner-solver tolerance and the step size by
//! the stated formulas below, never tuned per run. The reports carry the
//! location of the worst case so a failure is directly inspectable.

use thiserror::Error;

use crate::eigen::GroundState;
use crate::field::{Field, FieldError};
use crate::grid::Cylinder;
use crate::operator::{lp_norm_p, pow_abs};
use crate::stepper::{FlowParams, FlowTrace};

#[derive(Debug, Error, PartialEq)]
pub enum DiagError {
    #[error("fewer than {min} usable samples in the window (got {got})")]
    InsufficientPoints { got: usize, min: usize },
    #[error("zero or negative mass at step {step} inside the fit window")]
    ZeroMass { step: usize },
    #[error("ordering precondition violated at cell {index}: {lower} > {upper} at t = 0")]
    PreconditionViolated { index: usize, lower: f64, upper: f64 },
    #[error("state sequences have different lengths ({a} vs {b})")]
    MismatchedRuns { a: usize, b: usize },
    #[error("cylinder at (x0 = {x0}, t0 = {t0}) leaves the computed domain: {why}")]
    CylinderOutsideDomain { x0: f64, t0: f64, why: String },
    #[error("cylinder level {level} holds only {got} stored steps (need at least 3)")]
    InsufficientTimeResolution { level: u32, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Outcome of one structural check. `passed` holds exactly when
/// `worst_violation <= slack_budget`.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub worst_violation: f64,
    pub slack_budget: f64,
    /// Step index or cylinder where the worst case occurred.
    pub location: Option<String>,
    pub detail: Option<String>,
}

impl CheckReport {
    fn new(
        name: &str,
        worst_violation: f64,
        slack_budget: f64,
        location: Option<String>,
        detail: Option<String>,
    ) -> Self {
        Self {
            name: name.to_string(),
            passed: worst_violation <= slack_budget,
            worst_violation,
            slack_budget,
            location,
            detail,
        }
    }
}

/// Per-step slack of the energy inequality: n·step_tol·(1 + ‖g‖_∞).
pub fn energy_slack(n_cells: usize, step_tol: f64, g_sup: f64) -> f64 {
    n_cells as f64 * step_tol * (1.0 + g_sup)
}

/// Slack of pointwise ordering properties (sup bound, comparison, barrier).
pub fn ordering_slack(step_tol: f64) -> f64 {
    10.0 * step_tol
}

/// Stated slack of the weighted-energy checks for a single run. One implicit
/// step contracts a ground-state ray by 1/(1 + μτ), which exceeds e^{−μτ} by
/// O(μ²τ²): per step the weighted energy may grow by ≤ 2p²E₀μ²τ², and the
/// cumulative drift against the exact envelope peaks at ≤ p·E₀·μτ/2. The
/// budget is the sum of both plus the solver-noise floor of the energy check.
pub fn weighted_slack(
    p: f64,
    e0: f64,
    mu: f64,
    tau: f64,
    n_cells: usize,
    step_tol: f64,
    g_sup: f64,
) -> f64 {
    0.5 * p * e0 * mu * tau
        + 2.0 * p * p * e0 * mu * mu * tau * tau
        + energy_slack(n_cells, step_tol, g_sup)
}

/// Checks the cumulative dissipation inequality
/// Σ_{k≤j} D_k + E_j ≤ E_0 + j·slack for every prefix j, with
/// slack = n·step_tol·(1 + ‖g‖_∞). Also validates the trace itself:
/// dissipations must be finite and nonnegative.
pub fn check_energy_identity(trace: &FlowTrace, step_tol: f64) -> CheckReport {
    let name = "energy-identity";
    let slack = energy_slack(trace.n_cells, step_tol, trace.initial_sup());
    if trace.rows.is_empty() {
        return CheckReport::new(name, 0.0, 0.0, None, Some("empty trace".into()));
    }
    let e0 = trace.rows[0].energy;
    let mut cum_d = 0.0;
    let mut worst = f64::NEG_INFINITY;
    let mut loc = 0usize;
    for (j, row) in trace.rows.iter().enumerate() {
        let bad_row = !row.dissipation.is_finite()
            || row.dissipation < 0.0
            || !row.energy.is_finite()
            || !row.mass.is_finite();
        if bad_row {
            return CheckReport::new(
                name,
                f64::INFINITY,
                0.0,
                Some(format!("step {j}")),
                Some(format!(
                    "invalid trace row: dissipation = {}, energy = {}",
                    row.dissipation, row.energy
                )),
            );
        }
        if j == 0 {
            continue;
        }
        cum_d += row.dissipation;
        let violation = cum_d + row.energy - e0 - j as f64 * slack;
        if violation > worst {
            worst = violation;
            loc = j;
        }
    }
    if worst == f64::NEG_INFINITY {
        // Single-row trace: nothing to check beyond validity.
        return CheckReport::new(name, 0.0, 0.0, None, Some("no steps taken".into()));
    }
    CheckReport::new(
        name,
        worst,
        0.0,
        Some(format!("step {loc}")),
        Some(format!("per-step slack {slack:.3e} already deducted")),
    )
}

/// Checks R_k ≤ R_{k−1} + slack wherever both masses are positive. If the
/// mass hits zero the check is truncated from that step on and the report
/// says so.
pub fn check_rayleigh_monotone(trace: &FlowTrace, slack: f64) -> CheckReport {
    let name = "rayleigh-monotone";
    let rows = &trace.rows;
    let end = rows
        .iter()
        .position(|r| !(r.mass > 0.0))
        .unwrap_or(rows.len());
    let detail = if end < rows.len() {
        Some(format!("zero mass at step {end}; later steps not checked"))
    } else {
        None
    };
    let mut worst = 0.0f64;
    let mut loc = None;
    for k in 1..end {
        let v = rows[k].rayleigh - rows[k - 1].rayleigh;
        if v > worst {
            worst = v;
            loc = Some(format!("step {k}"));
        }
    }
    CheckReport::new(name, worst, slack, loc, detail)
}

/// Checks the two weighted-energy properties against the grid's own decay
/// rate mu: e^{μpt_k}·p·E_k nonincreasing in k within slack, and
/// p·E_k ≤ e^{−pμt_k}·p·E_0 + slack.
pub fn check_weighted_seminorm(trace: &FlowTrace, mu: f64, slack: f64) -> CheckReport {
    let name = "weighted-seminorm";
    let p = trace.p;
    let rows = &trace.rows;
    if rows.is_empty() {
        return CheckReport::new(name, 0.0, slack, None, Some("empty trace".into()));
    }
    let pe0 = p * rows[0].energy;
    let mut worst = 0.0f64;
    let mut loc = None;
    let mut w_prev = pe0;
    for (k, row) in rows.iter().enumerate().skip(1) {
        let w = (mu * p * row.time).exp() * p * row.energy;
        let mono = w - w_prev;
        if mono > worst {
            worst = mono;
            loc = Some(format!("monotonicity at step {k}"));
        }
        let decay = p * row.energy - (-p * mu * row.time).exp() * pe0;
        if decay > worst {
            worst = decay;
            loc = Some(format!("decay bound at step {k}"));
        }
        w_prev = w;
    }
    CheckReport::new(name, worst, slack, loc, None)
}

/// Checks sup-norm monotonicity of the flow from the trace:
/// ‖v^k‖_∞ ≤ ‖v^{k−1}‖_∞ + slack.
pub fn check_sup_monotone(trace: &FlowTrace, slack: f64) -> CheckReport {
    let name = "sup-monotone";
    let mut worst = 0.0f64;
    let mut loc = None;
    for k in 1..trace.rows.len() {
        let v = trace.rows[k].sup_norm - trace.rows[k - 1].sup_norm;
        if v > worst {
            worst = v;
            loc = Some(format!("step {k}"));
        }
    }
    CheckReport::new(name, worst, slack, loc, None)
}

/// Least-squares decay rate of the mass: fits log M_k against t_k over the
/// window and returns −slope/p, the empirical μ.
pub fn fit_decay_rate(trace: &FlowTrace, window: (f64, f64)) -> Result<f64, DiagError> {
    let (t_lo, t_hi) = window;
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for row in &trace.rows {
        if row.time >= t_lo && row.time <= t_hi {
            if !(row.mass > 0.0) {
                return Err(DiagError::ZeroMass { step: row.step });
            }
            ts.push(row.time);
            ys.push(row.mass.ln());
        }
    }
    if ts.len() < 5 {
        return Err(DiagError::InsufficientPoints {
            got: ts.len(),
            min: 5,
        });
    }
    let nf = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, y) in ts.iter().zip(&ys) {
        num += (t - t_mean) * (y - y_mean);
        den += (t - t_mean) * (t - t_mean);
    }
    if den == 0.0 {
        return Err(DiagError::InsufficientPoints { got: 1, min: 5 });
    }
    Ok(-(num / den) / trace.p)
}

/// Compares the rescaled final state e^{μ t_K} v^K against a computed
/// ground state. Passing means the normalized L^p distance is at most tol;
/// the max-norm distance is reported alongside. A rescaled state whose mass
/// has collapsed below 1e−6 of the initial mass is the "limit is zero"
/// branch: reported, not failed.
pub fn check_large_time_limit(
    states: &[Field],
    trace: &FlowTrace,
    gs: &GroundState,
    tol: f64,
) -> CheckReport {
    let name = "large-time-limit";
    let Some(last) = states.last() else {
        return CheckReport::new(name, 0.0, tol, None, Some("no states".into()));
    };
    let k = states.len() - 1;
    // A dense sequence aligns with the trace rows; a strided sequence read
    // back from disk still ends at the final step, whose time is the last row.
    let t_k = if states.len() == trace.rows.len() {
        trace.rows[k].time
    } else {
        trace.rows.last().map_or(k as f64 * trace.tau, |r| r.time)
    };
    let p = trace.p;

    let rescaled = last.scale((gs.mu * t_k).exp());
    let mass = lp_norm_p(&rescaled).powf(1.0 / p);
    let initial_mass = trace.rows[0].mass.powf(1.0 / p);
    if mass <= 1e-6 * initial_mass {
        return CheckReport::new(
            name,
            0.0,
            tol,
            Some(format!("step {k}")),
            Some(format!(
                "limit is zero: rescaled mass {mass:.3e} below 1e-6 of initial {initial_mass:.3e}"
            )),
        );
    }

    let unit = rescaled.scale(1.0 / mass);
    let h = last.grid().h();
    let inner: f64 = unit
        .values()
        .iter()
        .zip(gs.psi.values())
        .map(|(&u, &q)| u * q * h)
        .sum();
    let sigma = if inner < 0.0 { -1.0 } else { 1.0 };
    let mut dist_p = 0.0;
    let mut dist_sup = 0.0f64;
    for (&u, &q) in unit.values().iter().zip(gs.psi.values()) {
        let d = u - sigma * q;
        dist_p += pow_abs(d, p) * h;
        dist_sup = dist_sup.max(d.abs());
    }
    let dist_p = dist_p.powf(1.0 / p);

    // Stagnation sanity over the last tenth of the run.
    let tail = trace.rows.len().max(10) / 10;
    let stagnated = trace
        .rows
        .iter()
        .rev()
        .take(tail + 1)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| (w[0].rayleigh - w[1].rayleigh).abs() < tol);
    let mut detail = format!(
        "sup-norm distance {dist_sup:.3e}; sign {}",
        if sigma > 0.0 { "+" } else { "-" }
    );
    if !stagnated {
        detail.push_str("; warning: Rayleigh value still moving in the final decade");
    }
    CheckReport::new(
        name,
        dist_p,
        tol,
        Some(format!("step {k}")),
        Some(detail),
    )
}

/// Pointwise comparison of two flows started from ordered data:
/// requires g_lower ≤ g_upper exactly at t = 0, then checks
/// v_lower ≤ v_upper + slack at every step and cell.
pub fn check_comparison(
    states_lower: &[Field],
    states_upper: &[Field],
    slack: f64,
) -> Result<CheckReport, DiagError> {
    if states_lower.len() != states_upper.len() {
        return Err(DiagError::MismatchedRuns {
            a: states_lower.len(),
            b: states_upper.len(),
        });
    }
    let (Some(first_lo), Some(first_hi)) = (states_lower.first(), states_upper.first()) else {
        return Err(DiagError::MismatchedRuns { a: 0, b: 0 });
    };
    first_lo.check_compatible(first_hi)?;
    for (i, (&lo, &hi)) in first_lo
        .values()
        .iter()
        .zip(first_hi.values())
        .enumerate()
    {
        if lo > hi {
            return Err(DiagError::PreconditionViolated {
                index: i,
                lower: lo,
                upper: hi,
            });
        }
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    for (k, (a, b)) in states_lower.iter().zip(states_upper).enumerate() {
        for (i, (&lo, &hi)) in a.values().iter().zip(b.values()).enumerate() {
            let v = lo - hi;
            if v > worst {
                worst = v;
                loc = Some(format!("step {k}, cell {i}"));
            }
        }
    }
    Ok(CheckReport::new("comparison", worst, slack, loc, None))
}

/// Barrier bound: requires |g| ≤ psi exactly at t = 0, then checks
/// |v^k_i| ≤ psi_i + slack throughout the flow.
pub fn check_barrier(
    states: &[Field],
    psi: &Field,
    slack: f64,
) -> Result<CheckReport, DiagError> {
    let Some(first) = states.first() else {
        return Err(DiagError::MismatchedRuns { a: 0, b: 0 });
    };
    first.check_compatible(psi)?;
    for (i, (&g, &q)) in first.values().iter().zip(psi.values()).enumerate() {
        if g.abs() > q {
            return Err(DiagError::PreconditionViolated {
                index: i,
                lower: g.abs(),
                upper: q,
            });
        }
    }
    let mut worst = 0.0f64;
    let mut loc = None;
    for (k, state) in states.iter().enumerate() {
        for (i, (&v, &q)) in state.values().iter().zip(psi.values()).enumerate() {
            let excess = v.abs() - q;
            if excess > worst {
                worst = excess;
                loc = Some(format!("step {k}, cell {i}"));
            }
        }
    }
    Ok(CheckReport::new("barrier", worst, slack, loc, None))
}

/// Oscillations of one base point over dyadic parabolic cylinders, and the
/// per-point decay exponent fitted from them.
#[derive(Debug, Clone)]
pub struct HolderRow {
    pub x0: f64,
    pub t0: f64,
    pub r0: f64,
    /// osc over Q^−_{r0·2^{−j}} for j = 0..=levels.
    pub oscillations: Vec<f64>,
    /// −slope of log₂ osc against j; None when too few positive entries.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HolderEstimate {
    /// Most pessimistic per-point exponent; None when no point admits a fit
    /// (e.g. the zero flow has all oscillations zero).
    pub alpha_fit: Option<f64>,
    pub table: Vec<HolderRow>,
}

/// Measures osc v over the dyadic cylinders Q^−_{r·2^{−j}}(x0, t0) for
/// j = 0..=levels at each base cylinder, using the step interpolant of the
/// dense state sequence, and fits the decay exponent per base point.
///
/// The cylinders shrink with the intrinsic time scaling r^γ, γ = sp/(p−1),
/// so the oscillation table is nonincreasing in j by set nesting.
pub fn estimate_holder(
    states: &[Field],
    params: &FlowParams,
    cylinders: &[Cylinder],
    levels: u32,
) -> Result<HolderEstimate, DiagError> {
    let Some(first) = states.first() else {
        return Err(DiagError::MismatchedRuns { a: 0, b: 0 });
    };
    let grid = first.grid();
    let tau = params.tau;
    let t_max = (states.len() - 1) as f64 * tau;

    let mut table = Vec::with_capacity(cylinders.len());
    for base in cylinders {
        let (t_lo0, t_hi0) = base.time_window();
        if base.x0 - base.r < grid.a() || base.x0 + base.r > grid.b() {
            return Err(DiagError::CylinderOutsideDomain {
                x0: base.x0,
                t0: base.t0,
                why: format!("spatial ball of radius {} leaves the interval", base.r),
            });
        }
        if t_lo0 < -1e-12 || t_hi0 > t_max + 1e-9 * (1.0 + t_max) {
            return Err(DiagError::CylinderOutsideDomain {
                x0: base.x0,
                t0: base.t0,
                why: format!(
                    "time window ({t_lo0:.6}, {t_hi0:.6}] leaves the computed range [0, {t_max:.6}]"
                ),
            });
        }

        let mut oscillations = Vec::with_capacity(levels as usize + 1);
        for j in 0..=levels {
            let c = base.dyadic(j);
            let (t_lo, t_hi) = c.time_window();
            // Step interpolant: state k covers ((k−1)τ, kτ].
            let k_min = ((t_lo / tau).floor() as isize + 1).max(1) as usize;
            let k_max = ((t_hi / tau) - 1e-9).ceil().max(1.0) as usize;
            let k_max = k_max.min(states.len() - 1);
            if k_max < k_min || k_max - k_min + 1 < 3 {
                return Err(DiagError::InsufficientTimeResolution {
                    level: j,
                    got: k_max.saturating_sub(k_min) + 1,
                });
            }
            let cells: Vec<usize> = (0..grid.n())
                .filter(|&i| (grid.center(i) - c.x0).abs() <= c.r + 1e-12)
                .collect();
            if cells.is_empty() {
                return Err(DiagError::InsufficientTimeResolution { level: j, got: 0 });
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for state in &states[k_min..=k_max] {
                for &i in &cells {
                    let v = state.values()[i];
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            oscillations.push(hi - lo);
        }

        let alpha = fit_alpha(&oscillations);
        table.push(HolderRow {
            x0: base.x0,
            t0: base.t0,
            r0: base.r,
            oscillations,
            alpha,
        });
    }

    let alpha_fit = table
        .iter()
        .filter_map(|r| r.alpha)
        .fold(None, |acc: Option<f64>, a| {
            Some(acc.map_or(a, |b| b.min(a)))
        });
    Ok(HolderEstimate { alpha_fit, table })
}

/// Slope fit of log₂ osc_j against −j over the positive entries.
fn fit_alpha(osc: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = osc
        .iter()
        .enumerate()
        .filter(|(_, &o)| o > 0.0)
        .map(|(j, &o)| (j as f64, o.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = pts.len() as f64;
    let x_mean = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let y_mean = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in &pts {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    if den == 0.0 {
        return None;
    }
    Some(-(num / den))
}
