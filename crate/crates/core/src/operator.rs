//! The discrete fractional p-Laplacian, its energy seminorm, and the
//! weak residual of the implicit time step.
//!
//! With pair weights `K_ij` and tail weights `T_i` from [`Grid1D`], the
//! discrete energy seminorm is
//!
//! ```text
//! [u]^p = Σ_{i≠j} |u_i − u_j|^p K_ij  +  Σ_i |u_i|^p T_i h
//! ```
//!
//! and the operator applied to a field is
//!
//! ```text
//! G_i = (2/h) Σ_j jp(u_i − u_j) K_ij + jp(u_i) T_i
//! ```
//!
//! These are linked by the exact identity `h·G = ∇ (1/p)[u]^p`, so the flow
//! stepper can treat each implicit step as a smooth convex minimization.
//! Testing against that identity (finite differences of the seminorm) is the
//! primary correctness check for this module.
//!
//! Row sums run in parallel but each row is accumulated sequentially and
//! rows are combined in index order, so results are bit-identical regardless
//! of thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::field::{Field, FieldError};
use crate::grid::{Grid1D, GridError};

#[derive(Debug, Error, PartialEq)]
pub enum OperatorError {
    #[error("Rayleigh quotient undefined for a field with zero mass")]
    ZeroField,
    #[error("time step tau = {0} must be positive and finite")]
    InvalidTimeStep(f64),
    #[error("matrix form requires p = 2 but the grid has p = {0}")]
    NotLinear(f64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Convenience constructor mirroring [`Grid1D::new`].
pub fn build_grid(a: f64, b: f64, n: usize, s: f64, p: f64) -> Result<Grid1D, GridError> {
    Grid1D::new(a, b, n, s, p)
}

/// The odd power nonlinearity |t|^{p−2} t, with jp(0) = 0 for every p > 1.
#[inline]
pub fn jp(t: f64, p: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else if p == 2.0 {
        t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

/// |t|^p with a fast path for p = 2.
#[inline]
pub(crate) fn pow_abs(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.abs().powf(p)
    }
}

/// The energy seminorm raised to the p-th power, [u]^p.
pub fn seminorm_p(u: &Field) -> f64 {
    let g = u.grid();
    let p = g.p();
    let h = g.h();
    let vals = u.values();
    let rows: Vec<f64> = (0..g.n())
        .into_par_iter()
        .map(|i| {
            let ui = vals[i];
            let row = g.kernel_row(i);
            let mut acc = 0.0;
            for (uj, k) in vals.iter().zip(row) {
                acc += pow_abs(ui - uj, p) * k;
            }
            acc + pow_abs(ui, p) * g.tail()[i] * h
        })
        .collect();
    rows.iter().sum()
}

/// The p-th power of the L^p norm, Σ_i |u_i|^p h.
pub fn lp_norm_p(u: &Field) -> f64 {
    let p = u.grid().p();
    let h = u.grid().h();
    u.values().iter().map(|&v| pow_abs(v, p) * h).sum()
}

/// Rayleigh quotient [u]^p / ‖u‖_p^p; errors on the zero field.
pub fn rayleigh(u: &Field) -> Result<f64, OperatorError> {
    let mass = lp_norm_p(u);
    if mass == 0.0 {
        return Err(OperatorError::ZeroField);
    }
    Ok(seminorm_p(u) / mass)
}

/// Applies the operator: G_i = (2/h) Σ_j jp(u_i − u_j) K_ij + jp(u_i) T_i.
pub fn apply_operator(u: &Field) -> Field {
    let g = u.grid();
    let p = g.p();
    let two_over_h = 2.0 / g.h();
    let vals = u.values();
    let out: Vec<f64> = (0..g.n())
        .into_par_iter()
        .map(|i| {
            let ui = vals[i];
            let row = g.kernel_row(i);
            let mut acc = 0.0;
            for (uj, k) in vals.iter().zip(row) {
                acc += jp(ui - uj, p) * k;
            }
            two_over_h * acc + jp(ui, p) * g.tail()[i]
        })
        .collect();
    Field::new_unchecked(u.grid().clone(), out)
}

/// Residual of the implicit step: R_i = jp((w_i − v_i)/τ) + G(w)_i.
///
/// A root in `w` makes `w` the backward-Euler update of `v` over one step
/// of length `tau`.
pub fn weak_residual(w: &Field, v: &Field, tau: f64) -> Result<Field, OperatorError> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(OperatorError::InvalidTimeStep(tau));
    }
    w.check_compatible(v)?;
    let p = w.grid().p();
    let gw = apply_operator(w);
    let out: Vec<f64> = w
        .values()
        .iter()
        .zip(v.values())
        .zip(gw.values())
        .map(|((&wi, &vi), &gi)| jp((wi - vi) / tau, p) + gi)
        .collect();
    Ok(Field::new_unchecked(w.grid().clone(), out))
}

/// |t|^{p−2} with fast paths; for p < 2 the singularity at 0 is capped so
/// best-effort Newton directions stay finite.
#[inline]
pub(crate) fn pow_pm2(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        1.0
    } else if p == 3.0 {
        t.abs()
    } else if p > 2.0 {
        t.abs().powf(p - 2.0)
    } else {
        t.abs().max(1e-9).powf(p - 2.0)
    }
}

/// Jacobian of apply_operator at w, equal to (1/h)·∇²((1/p)[w]^p):
/// M_ii = (p−1)[(2/h)Σ_{j≠i}|w_i−w_j|^{p−2}K_ij + |w_i|^{p−2}T_i],
/// M_ij = −(p−1)(2/h)|w_i−w_j|^{p−2}K_ij. Symmetric, weakly diagonally
/// dominant with nonnegative diagonal, hence positive semidefinite.
pub(crate) fn curvature_matrix(w: &Field) -> nalgebra::DMatrix<f64> {
    let g = w.grid();
    let n = g.n();
    let p = g.p();
    let pm1 = p - 1.0;
    let two_over_h = 2.0 / g.h();
    let wv = w.values();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let row = g.kernel_row(i);
        let mut diag = pm1 * pow_pm2(wv[i], p) * g.tail()[i];
        for (j, &k) in row.iter().enumerate() {
            if j != i {
                let c = pm1 * two_over_h * pow_pm2(wv[i] - wv[j], p) * k;
                if j > i {
                    m[(i, j)] = -c;
                    m[(j, i)] = -c;
                }
                diag += c;
            }
        }
        m[(i, i)] = diag;
    }
    m
}

/// Matrix A with A u = apply_operator(u) for p = 2, where the operator is
/// linear. A is symmetric positive definite.
pub fn operator_matrix(grid: &Grid1D) -> Result<nalgebra::DMatrix<f64>, OperatorError> {
    if grid.p() != 2.0 {
        return Err(OperatorError::NotLinear(grid.p()));
    }
    let n = grid.n();
    let two_over_h = 2.0 / grid.h();
    let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let row = grid.kernel_row(i);
        let mut diag = 0.0;
        for j in 0..n {
            if j != i {
                a[(i, j)] = -two_over_h * row[j];
                diag += row[j];
            }
        }
        a[(i, i)] = two_over_h * diag + grid.tail()[i];
    }
    Ok(a)
}
