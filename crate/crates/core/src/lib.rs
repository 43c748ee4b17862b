//! Solver library for the doubly nonlinear nonlocal evolution
//!
//! ```text
//! |v_t|^{p−2} v_t + (−Δ_p)^s v = 0      in Ω × (0, ∞)
//!            v = 0                      on (ℝ∖Ω) × (0, ∞)
//!            v = g                      at t = 0
//! ```
//!
//! on a bounded interval Ω = (a, b), with p > 1 and s ∈ (0, 1). The scheme
//! is implicit Euler in time; each step is the strictly convex minimization
//! of `(τ/p)‖(w − v)/τ‖_p^p + (1/p)[w]^p`, where `[·]` is the nonlocal
//! energy seminorm discretized on a cell-centered grid with exact zero
//! extension outside Ω.
//!
//! The crate exposes:
//! - [`grid`]: the grid, kernel/tail weights, and parabolic cylinders;
//! - [`field`]: grid-sampled scalar fields;
//! - [`operator`]: the discrete operator, seminorm, and weak residual;
//! - [`stepper`]: the implicit step and the full flow driver;
//! - [`eigen`]: ground states (first eigenpairs) by three routes;
//! - [`diagnostics`]: structure checks on computed flows (energy balance,
//!   comparison, sharp decay rate, Hölder regularity estimates);
//! - [`config`] and [`io`]: run configuration, trace/snapshot/manifest files;
//! - [`cli`]: the `fracflow` command-line front end.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod eigen;
pub mod field;
pub mod grid;
pub mod io;
pub mod operator;
pub mod stepper;

pub use field::{Field, FieldError};
pub use grid::{Cylinder, Grid1D, GridError};
pub use operator::{
    apply_operator, build_grid, jp, lp_norm_p, operator_matrix, rayleigh, seminorm_p,
    weak_residual, OperatorError,
};
