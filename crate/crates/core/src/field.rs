//! A scalar field sampled at the cell centers of a [`Grid1D`].

use std::sync::Arc;

use thiserror::Error;

use crate::grid::Grid1D;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("value count {got} does not match grid cell count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
}

/// Cell-center samples of a function on Ω, extended by zero outside.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid1D>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid1D>, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.n() {
            return Err(FieldError::LengthMismatch {
                got: values.len(),
                expected: grid.n(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(FieldError::NonFinite { index: i, value: v });
            }
        }
        Ok(Self { grid, values })
    }

    /// Construction from values already known to be the right length.
    /// Finiteness is not enforced; used for derived quantities (residuals,
    /// operator output) whose consumers check magnitudes themselves.
    pub(crate) fn new_unchecked(grid: Arc<Grid1D>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.n();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples a closure at every cell center.
    pub fn from_fn(grid: Arc<Grid1D>, f: impl Fn(f64) -> f64) -> Result<Self, FieldError> {
        let values: Vec<f64> = grid.centers().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest |u_i| over the grid.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Errors unless `other` lives on a grid with identical layout.
    pub fn check_compatible(&self, other: &Field) -> Result<(), FieldError> {
        if self.grid.same_layout(other.grid()) {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }

    pub fn scale(&self, c: f64) -> Field {
        Field {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}
