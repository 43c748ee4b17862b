//! Spatial discretization of the interval domain and the singular-kernel
//! weights of the fractional p-Laplacian.
//!
//! The domain Ω = (a, b) is split into `n` uniform cells with values taken
//! at cell centers. Functions are extended by zero on ℝ∖Ω, which turns the
//! exterior part of the nonlocal integral into a weight that only depends
//! on the distance of a cell center to the two boundary points; that weight
//! has the closed form
//!
//! ```text
//! T_i = (2/(s·p)) · ( (x_i − a)^{−sp} + (b − x_i)^{−sp} )
//! ```
//!
//! Interior pair interactions carry the weight `K_ij = h² |x_i − x_j|^{−1−sp}`.
//! The diagonal i = j is excluded (the stored K_ii is zero and never
//! contributes because every use multiplies it by an odd function of
//! `u_i − u_j`).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("empty domain: a = {a} must be strictly below b = {b}")]
    DomainEmpty { a: f64, b: f64 },
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("cell index {index} out of range for grid with {n} cells")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Cell-centered uniform grid on (a, b) with precomputed kernel weights.
///
/// Immutable after construction; cheap to share behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Grid1D {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    s: f64,
    p: f64,
    centers: Vec<f64>,
    /// Row-major n×n symmetric pair weights, zero on the diagonal.
    kernel_pairs: Vec<f64>,
    /// Exterior-tail weights, one per cell.
    tail: Vec<f64>,
}

impl Grid1D {
    /// Builds the grid and populates the pair and tail weights.
    ///
    /// Requires a < b, n ≥ 3, s ∈ (0, 1) and p > 1. Values 1 < p < 2 are
    /// accepted but flagged by [`Grid1D::p_below_two`]; the monotonicity and
    /// regularity guarantees of the solver are only promised for p ≥ 2.
    pub fn new(a: f64, b: f64, n: usize, s: f64, p: f64) -> Result<Self, GridError> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(GridError::DomainEmpty { a, b });
        }
        if n < 3 {
            return Err(GridError::ParameterOutOfRange(format!(
                "n = {n} but at least 3 cells are required"
            )));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(GridError::ParameterOutOfRange(format!(
                "s = {s} must lie in (0,1)"
            )));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(GridError::ParameterOutOfRange(format!(
                "p = {p} must be finite and exceed 1"
            )));
        }

        let h = (b - a) / n as f64;
        let centers: Vec<f64> = (0..n).map(|i| a + (i as f64 + 0.5) * h).collect();
        let sp = s * p;

        let mut kernel_pairs = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = h * h * (centers[j] - centers[i]).powf(-1.0 - sp);
                kernel_pairs[i * n + j] = w;
                kernel_pairs[j * n + i] = w;
            }
        }

        let tail: Vec<f64> = centers
            .iter()
            .map(|&x| (2.0 / sp) * ((x - a).powf(-sp) + (b - x).powf(-sp)))
            .collect();

        Ok(Self {
            a,
            b,
            n,
            h,
            s,
            p,
            centers,
            kernel_pairs,
            tail,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    /// True when 1 < p < 2; the build accepts such grids but the solver's
    /// convergence guarantees are stated for p ≥ 2 only.
    pub fn p_below_two(&self) -> bool {
        self.p < 2.0
    }

    /// Pair weight K_ij = h²|x_i − x_j|^{−1−sp}; the diagonal entry is zero.
    #[inline]
    pub fn kernel_pair(&self, i: usize, j: usize) -> f64 {
        self.kernel_pairs[i * self.n + j]
    }

    /// Row i of the pair-weight matrix.
    #[inline]
    pub fn kernel_row(&self, i: usize) -> &[f64] {
        &self.kernel_pairs[i * self.n..(i + 1) * self.n]
    }

    /// Exterior-tail weight T_i (see the module docs for the closed form).
    pub fn tail_weight(&self, i: usize) -> Result<f64, GridError> {
        if i >= self.n {
            return Err(GridError::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(self.tail[i])
    }

    pub fn tail(&self) -> &[f64] {
        &self.tail
    }

    /// Two grids interoperate when the defining parameters agree exactly.
    pub fn same_layout(&self, other: &Grid1D) -> bool {
        self.a == other.a
            && self.b == other.b
            && self.n == other.n
            && self.s == other.s
            && self.p == other.p
    }
}

/// Backward parabolic cylinder Q_r^−(x₀, t₀): the ball of radius `r` around
/// `x0` times the past time interval (t₀ − r^γ, t₀] with the intrinsic
/// scaling exponent γ = sp/(p−1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder {
    pub x0: f64,
    pub t0: f64,
    pub r: f64,
    pub gamma: f64,
}

impl Cylinder {
    pub fn new(x0: f64, t0: f64, r: f64, s: f64, p: f64) -> Result<Self, GridError> {
        if !(r > 0.0) {
            return Err(GridError::ParameterOutOfRange(format!(
                "cylinder radius r = {r} must be positive"
            )));
        }
        if !(s > 0.0 && s < 1.0) || !(p > 1.0) {
            return Err(GridError::ParameterOutOfRange(format!(
                "cylinder scaling needs s in (0,1) and p > 1, got s = {s}, p = {p}"
            )));
        }
        let gamma = s * p / (p - 1.0);
        Ok(Self { x0, t0, r, gamma })
    }

    /// Time extent (t₀ − r^γ, t₀].
    pub fn time_window(&self) -> (f64, f64) {
        (self.t0 - self.r.powf(self.gamma), self.t0)
    }

    /// The cylinder with radius shrunk by 2^{−j}, same center and top time.
    pub fn dyadic(&self, j: u32) -> Cylinder {
        Cylinder {
            x0: self.x0,
            t0: self.t0,
            r: self.r * 0.5f64.powi(j as i32),
            gamma: self.gamma,
        }
    }
}
