use serde::{Deserialize, Serialize};

use crate::error::ParamError;

/// Parameters shared by the growth, particle and array representations.
///
/// `v` is the up-jump rate (down-jumps run at `1/v`), `n` sets the number of
/// levels (`2n`) and the staircase size, `half_width` is the nucleation
/// window `[-L, L]`, and `steps` defaults to `2n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    v: f64,
    n: usize,
    half_width: f64,
    steps: usize,
}

impl ModelParams {
    pub fn new(v: f64, n: usize, half_width: f64) -> Result<Self, ParamError> {
        if !(v.is_finite() && v > 0.0) {
            return Err(ParamError::Rate(v));
        }
        if n == 0 {
            return Err(ParamError::Size);
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(ParamError::Window(half_width));
        }
        Ok(Self { v, n, half_width, steps: 2 * n })
    }

    /// Overrides the number of time steps. Zero steps is allowed and yields
    /// the flat initial profile only.
    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_half_width(self, half_width: f64) -> Result<Self, ParamError> {
        Ok(Self::new(self.v, self.n, half_width)?.with_steps(self.steps))
    }

    pub fn v(&self) -> f64 {
        self.v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Geometric ratio `v^2`; errors unless `0 < v < 1`.
    pub fn geometric_ratio(&self) -> Result<f64, ParamError> {
        check_geometric(self.v)?;
        Ok(self.v * self.v)
    }
}

pub(crate) fn check_geometric(v: f64) -> Result<(), ParamError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ParamError::GeometricRate(v))
    }
}
