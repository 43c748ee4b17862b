//! Ground states of the nonlocal Rayleigh quotient: the minimizers of
//! `[u]^p / ‖u‖_p^p` over nonzero fields, with eigenvalue λ and the sharp
//! flow decay rate μ = λ^{1/(p−1)}.
//!
//! Three independent routes compute the same object:
//!
//! - [`ground_state_flow`]: implicit flow step + L^p renormalization,
//!   an inverse-iteration reading of the large-time behavior of the flow;
//! - [`ground_state_direct`]: descent on the Rayleigh quotient itself,
//!   preconditioned by the curvature of the energy, with a monotone
//!   backtracking line search on the quotient;
//! - [`dense_p2_oracle`]: for p = 2 the operator is linear, so the ground
//!   state is the smallest eigenpair of the dense symmetric matrix,
//!   computed by inverse power iteration on a Cholesky factorization.
//!
//! Cross-agreement between the routes is the primary correctness evidence
//! for the nonlinear ones; the oracle is deliberately independent of the
//! stepper.

use nalgebra::{Cholesky, DVector};
use thiserror::Error;

use crate::field::{Field, FieldError};
use crate::grid::Grid1D;
use crate::operator::{
    apply_operator, curvature_matrix, jp, lp_norm_p, operator_matrix, rayleigh, OperatorError,
};
use crate::stepper::{implicit_step, solve_shifted, FlowParams, StepError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Flow,
    Direct,
    OracleP2,
}

impl std::fmt::Display for EigenMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EigenMethod::Flow => write!(f, "flow"),
            EigenMethod::Direct => write!(f, "direct"),
            EigenMethod::OracleP2 => write!(f, "oracle-p2"),
        }
    }
}

/// A computed ground state: psi has unit L^p mass and nonnegative sign
/// convention; lambda equals rayleigh(psi) by construction; residual is
/// ‖apply_operator(psi) − lambda·jp(psi)‖_∞.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub psi: Field,
    pub lambda: f64,
    pub mu: f64,
    pub method: EigenMethod,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("the p = 2 oracle requires p = 2, grid has p = {0}")]
    RequiresP2(f64),
    #[error("dense factorization failed")]
    FactorizationFailure,
    #[error("seed field is identically zero")]
    ZeroSeed,
    #[error("iterate collapsed to zero during renormalization")]
    ZeroCollapse,
    #[error("eigenvalue {0} must be positive")]
    NonpositiveLambda(f64),
    #[error("exponent p = {0} must exceed 1")]
    InvalidExponent(f64),
    #[error(
        "no convergence after {iterations} iterations (best residual {:.3e})",
        best.residual
    )]
    Nonconvergence {
        iterations: usize,
        /// Best iterate found, so callers can persist it.
        best: Box<GroundState>,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Step(#[from] StepError),
}

/// μ = λ^{1/(p−1)}, the sharp exponential decay rate of the flow.
pub fn mu_from_lambda(lambda: f64, p: f64) -> Result<f64, EigenError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(EigenError::NonpositiveLambda(lambda));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(EigenError::InvalidExponent(p));
    }
    Ok(lambda.powf(1.0 / (p - 1.0)))
}

/// Outer iteration cap shared by the flow and oracle routes.
pub const FLOW_OUTER_CAP: usize = 10_000;
/// Iteration cap of the direct quotient descent.
pub const DIRECT_ITER_CAP: usize = 50_000;
/// Residual tolerance guaranteed by the dense p = 2 oracle.
pub const ORACLE_RESIDUAL_TOL: f64 = 1e-10;

/// Max-norm of the eigen-equation defect G(u) − λ·jp(u).
fn eigen_residual(u: &Field, lambda: f64) -> f64 {
    let p = u.grid().p();
    let gu = apply_operator(u);
    gu.values()
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (&g, &ui)| m.max((g - lambda * jp(ui, p)).abs()))
}

/// Sign convention, mass normalization, and the reported (lambda, residual):
/// flip so the largest-magnitude entry is positive, zero out negative
/// entries no larger than the residual, renormalize to unit mass, then
/// recompute lambda = rayleigh(psi) and the residual at the final psi.
fn finalize(
    mut psi: Field,
    method: EigenMethod,
    iterations: usize,
) -> Result<GroundState, EigenError> {
    let mass = lp_norm_p(&psi);
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(EigenError::ZeroCollapse);
    }
    let p = psi.grid().p();
    let dominant = psi
        .values()
        .iter()
        .cloned()
        .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let flip = if dominant < 0.0 { -1.0 } else { 1.0 };
    let scale = flip / mass.powf(1.0 / p);
    for v in psi.values_mut() {
        *v *= scale;
    }

    let lambda = rayleigh(&psi)?;
    let resid = eigen_residual(&psi, lambda);
    let mut clamped = false;
    for v in psi.values_mut() {
        if *v < 0.0 && -*v <= resid {
            *v = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let mass = lp_norm_p(&psi);
        if !(mass > 0.0) {
            return Err(EigenError::ZeroCollapse);
        }
        let scale = 1.0 / mass.powf(1.0 / p);
        for v in psi.values_mut() {
            *v *= scale;
        }
    }
    let lambda = rayleigh(&psi)?;
    let residual = eigen_residual(&psi, lambda);
    let mu = mu_from_lambda(lambda, p)?;
    Ok(GroundState {
        psi,
        lambda,
        mu,
        method,
        residual,
        iterations,
    })
}

fn unit_mass(u: &Field) -> Result<Field, EigenError> {
    let m = lp_norm_p(u);
    if !(m > 0.0) || !m.is_finite() {
        return Err(EigenError::ZeroCollapse);
    }
    Ok(u.scale(1.0 / m.powf(1.0 / u.grid().p())))
}

/// Ground state as the normalized large-time limit of the flow: one implicit
/// step of length params.tau, then renormalize to unit mass, until both the
/// Rayleigh value stagnates below conv_tol and the eigen residual drops
/// below conv_tol.
pub fn ground_state_flow(
    g: &Field,
    params: &FlowParams,
    conv_tol: f64,
) -> Result<GroundState, EigenError> {
    params.validate(g.grid())?;
    if !(conv_tol > 0.0) {
        return Err(EigenError::Step(StepError::InvalidParams(format!(
            "conv_tol = {conv_tol} must be positive"
        ))));
    }
    if lp_norm_p(g) == 0.0 {
        return Err(EigenError::ZeroSeed);
    }
    let mut u = unit_mass(g)?;
    let mut r_prev = rayleigh(&u)?;

    for it in 1..=FLOW_OUTER_CAP {
        let out = implicit_step(&u, params)?;
        if !out.converged {
            return Err(EigenError::Nonconvergence {
                iterations: it,
                best: Box::new(finalize(u, EigenMethod::Flow, it)?),
            });
        }
        u = unit_mass(&out.state)?;
        let r_new = rayleigh(&u)?;
        let resid = eigen_residual(&u, r_new);
        if (r_new - r_prev).abs() < conv_tol && resid < conv_tol {
            return finalize(u, EigenMethod::Flow, it);
        }
        r_prev = r_new;
    }
    Err(EigenError::Nonconvergence {
        iterations: FLOW_OUTER_CAP,
        best: Box::new(finalize(u, EigenMethod::Flow, FLOW_OUTER_CAP)?),
    })
}

/// Ground state by direct descent on the Rayleigh quotient. The raw descent
/// direction G(u) − λ·jp(u) (the quotient gradient up to a positive factor
/// at unit mass) is preconditioned by the energy curvature at u; steps are
/// accepted only if the quotient does not increase beyond rounding, so the
/// Rayleigh value is monotone along iterates and any eigenfunction seed is
/// an immediate fixed point. Sign-definite seeds descend to the ground
/// state; a seed that is exactly a higher eigenfunction would stop there,
/// since the method only seeks stationarity.
pub fn ground_state_direct(
    grid: &Grid1D,
    seed: &Field,
    tol: f64,
) -> Result<GroundState, EigenError> {
    if !grid.same_layout(seed.grid()) {
        return Err(EigenError::Field(FieldError::GridMismatch));
    }
    if !(tol >= 0.0) {
        return Err(EigenError::Step(StepError::InvalidParams(format!(
            "tol = {tol} must be nonnegative"
        ))));
    }
    if lp_norm_p(seed) == 0.0 {
        return Err(EigenError::ZeroSeed);
    }
    let mut u = unit_mass(seed)?;
    let mut lambda = rayleigh(&u)?;
    let mut defect = quotient_defect(&u, lambda);
    let mut resid = sup_slice(defect.as_slice());
    if resid < tol {
        return finalize(u, EigenMethod::Direct, 0);
    }

    for it in 1..=DIRECT_ITER_CAP {
        let hess = curvature_matrix(&u);
        let rhs = DVector::from_column_slice(defect.as_slice());
        let Some(dir) = solve_shifted(hess, &rhs) else {
            return Err(EigenError::Nonconvergence {
                iterations: it,
                best: Box::new(finalize(u, EigenMethod::Direct, it)?),
            });
        };

        // Backtracking from the full preconditioned step (for p = 2 the full
        // step is exactly one inverse power iteration). Acceptance tolerates
        // rounding-level quotient growth so the residual keeps contracting
        // after lambda has saturated at machine precision.
        let accept_slack = 1e-13 * (1.0 + lambda.abs());
        let mut eta = 1.0f64;
        let mut accepted = false;
        for _ in 0..40 {
            let vals: Vec<f64> = u
                .values()
                .iter()
                .zip(dir.iter())
                .map(|(&ui, &di)| ui + eta * di)
                .collect();
            if vals.iter().all(|v| v.is_finite()) {
                if let Ok(trial) = Field::new(u.grid().clone(), vals) {
                    if lp_norm_p(&trial) > 0.0 {
                        let trial = unit_mass(&trial)?;
                        let l_trial = rayleigh(&trial)?;
                        if l_trial <= lambda + accept_slack {
                            u = trial;
                            lambda = l_trial;
                            accepted = true;
                            break;
                        }
                    }
                }
            }
            eta *= 0.5;
        }
        if !accepted {
            // The quotient cannot be decreased along the preconditioned
            // direction even at machine-level steps: stationary.
            return if resid < tol {
                finalize(u, EigenMethod::Direct, it)
            } else {
                Err(EigenError::Nonconvergence {
                    iterations: it,
                    best: Box::new(finalize(u, EigenMethod::Direct, it)?),
                })
            };
        }

        defect = quotient_defect(&u, lambda);
        resid = sup_slice(defect.as_slice());
        if resid < tol {
            return finalize(u, EigenMethod::Direct, it);
        }
    }
    Err(EigenError::Nonconvergence {
        iterations: DIRECT_ITER_CAP,
        best: Box::new(finalize(u, EigenMethod::Direct, DIRECT_ITER_CAP)?),
    })
}

/// G(u) − λ·jp(u), the negative descent direction of the quotient at unit
/// mass (up to the positive factor p·h).
fn quotient_defect(u: &Field, lambda: f64) -> Vec<f64> {
    let p = u.grid().p();
    apply_operator(u)
        .values()
        .iter()
        .zip(u.values())
        .map(|(&g, &ui)| g - lambda * jp(ui, p))
        .collect()
}

fn sup_slice(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Dense linear ground state for p = 2: smallest eigenpair of the operator
/// matrix by inverse power iteration, iterated until the eigen residual of
/// the mass-normalized eigenvector is at most 1e−10.
pub fn dense_p2_oracle(grid: &Grid1D) -> Result<GroundState, EigenError> {
    if grid.p() != 2.0 {
        return Err(EigenError::RequiresP2(grid.p()));
    }
    let n = grid.n();
    let a = operator_matrix(grid)?;
    let chol = Cholesky::new(a.clone()).ok_or(EigenError::FactorizationFailure)?;

    // The final psi is mass-normalized: psi = y/√h for unit Euclidean y, so
    // the Euclidean residual target carries a factor √h (with margin).
    let target = 0.5 * ORACLE_RESIDUAL_TOL * grid.h().sqrt();
    let mut y = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for it in 1..=FLOW_OUTER_CAP {
        y = chol.solve(&y);
        let norm = y.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(EigenError::ZeroCollapse);
        }
        y /= norm;
        let ay = &a * &y;
        let lambda = y.dot(&ay);
        let resid = (0..n).fold(0.0f64, |m, i| m.max((ay[i] - lambda * y[i]).abs()));
        if resid <= target {
            let psi = Field::new_unchecked(
                std::sync::Arc::new(grid.clone()),
                y.iter().copied().collect(),
            );
            return finalize(psi, EigenMethod::OracleP2, it);
        }
    }
    let psi = Field::new_unchecked(
        std::sync::Arc::new(grid.clone()),
        y.iter().copied().collect(),
    );
    Err(EigenError::Nonconvergence {
        iterations: FLOW_OUTER_CAP,
        best: Box::new(finalize(psi, EigenMethod::OracleP2, FLOW_OUTER_CAP)?),
    })
}
