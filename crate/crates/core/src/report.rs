use crate::mesh::NodalField;

/// One outer iteration of a solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// ‖F(ξ)‖ for the dual Newton method, ‖w + p‖_w for trust region,
    /// ‖ξ_{k+1} - ξ_k‖ for the fixed-point iteration.
    pub residual: f64,
    /// Φ(ξ) or J(w) at the iterate.
    pub merit: f64,
    /// Trust-region radius used for this iteration.
    pub radius: Option<f64>,
    /// Armijo step length or trust-region ratio ρ.
    pub step: f64,
    pub accepted: bool,
    pub boundary_hit: bool,
    pub cg_iterations: usize,
    pub pred: Option<f64>,
    pub ared: Option<f64>,
    pub solves: usize,
    pub factorizations: usize,
}

/// Outcome of a single solver run on one mesh level.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub subdivisions: usize,
    pub nodes: usize,
    pub iterations: usize,
    pub factorizations: usize,
    pub solves: usize,
    pub wall_time_s: f64,
    pub converged: bool,
    pub diverged: bool,
    /// Largest number of degenerate cut elements seen at any iterate.
    pub degenerate_elements: usize,
    /// Cut elements touching ∂Ω at the final iterate.
    pub boundary_cuts: usize,
    pub final_residual: f64,
    /// Φ at the final iterate (dual Newton), J (trust region), or the tracking
    /// objective ½‖y - y_d‖² (fixed point).
    pub final_objective: f64,
    /// Ratios of successive error or step norms, see the individual solvers.
    pub contraction_factors: Vec<f64>,
    pub warnings: Vec<String>,
    pub trace: Vec<IterationRecord>,
    /// Final switching function; the control is `u_b sign(w)`.
    pub w: NodalField,
    pub u_bound: f64,
}
