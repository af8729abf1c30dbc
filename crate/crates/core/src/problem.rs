//! Problem data: the state nonlinearity and the desired state.

use crate::mesh::{NodalField, TriangularMesh};
use crate::error::{Error, Result};

/// Coefficient of the linear reaction term in `-Δy + 10y + αy³ = u`.
pub const LINEAR_COEFFICIENT: f64 = 10.0;

/// Desired state on (-1,1)².
pub fn desired_state(x1: f64, x2: f64) -> f64 {
    use std::f64::consts::PI;
    2.0 * (2.0 * PI * (x1 + 1.0) / 2.0).sin() * (2.0 * PI * x2).cos() + 0.8 * (x2 + x1 * x1) - 0.5
}

/// `min ½‖y - y_d‖²` subject to `-Δy + 10y + αy³ = u`, `∂y/∂ν = 0`, `|u| ≤ u_b`.
#[derive(Debug, Clone)]
pub struct SemilinearProblem {
    pub alpha: f64,
    pub u_bound: f64,
    pub y_d: NodalField,
}

impl SemilinearProblem {
    pub fn new(alpha: f64, u_bound: f64, y_d: NodalField) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(u_bound >= 0.0 && u_bound.is_finite()) {
            return Err(Error::InvalidArgument(format!("u_b must be >= 0, got {u_bound}")));
        }
        if !y_d.is_finite() {
            return Err(Error::NonFinite("desired state".into()));
        }
        Ok(Self { alpha, u_bound, y_d })
    }

    /// The benchmark problem with the standard desired state interpolated on `mesh`.
    pub fn benchmark(mesh: &TriangularMesh, alpha: f64, u_bound: f64) -> Result<Self> {
        Self::new(alpha, u_bound, mesh.interpolate(desired_state)?)
    }

    pub fn is_linear(&self) -> bool {
        self.alpha == 0.0
    }

    /// a(y) = 10y + αy³
    pub fn a(&self, y: f64) -> f64 {
        LINEAR_COEFFICIENT * y + self.alpha * y * y * y
    }

    /// a'(y) = 10 + 3αy²
    pub fn a_prime(&self, y: f64) -> f64 {
        LINEAR_COEFFICIENT + 3.0 * self.alpha * y * y
    }

    /// a''(y) = 6αy
    pub fn a_second(&self, y: f64) -> f64 {
        6.0 * self.alpha * y
    }
}
