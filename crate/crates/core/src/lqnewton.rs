//! Semismooth Newton method in the dual variable for the linear-quadratic
//! problem (α = 0).
//!
//! With `ξ = y_d - S u` and `u = u_b sign(S*ξ)` the optimality system reads
//!
//! ```text
//! F(ξ) = ξ + u_b S sign(S*ξ) - y_d = 0,
//! ```
//!
//! whose generalized derivative `G(ξ) = I + u_b S sign'(S*ξ) S*` is
//! self-adjoint and uniformly positive definite in the L² inner product.
//! Newton directions are computed by inexact CG in the mass inner product
//! and globalized by Armijo backtracking on the convex merit function
//! `Φ(ξ) = ½‖ξ - y_d‖² + u_b ‖S*ξ‖_{L¹}`, whose gradient is `F`. Once the
//! predicted decrease of Φ is below its rounding level, full steps that
//! reduce ‖F‖ are accepted instead.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::fem::{Discretization, LinearStateOperator};
use crate::mesh::NodalField;
use crate::problem::SemilinearProblem;
use crate::report::{IterationRecord, RunReport};
use crate::signum::{assemble_sign_derivative_with, integrate_sign_with, l1_norm_with, SignDerivativeMatrix};
use crate::sparse::{axpy, SolveCounters};

/// Relative size of an Armijo decrease below which Φ is considered flat.
const MERIT_RESOLUTION: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LqConfig {
    /// Stop when ‖F(ξ)‖_{L²} falls below this value.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub cg_max_iterations: usize,
    pub armijo_sigma: f64,
    pub max_halvings: usize,
    /// Initial dual iterate; defaults to `y_d`.
    pub initial: Option<NodalField>,
}

impl Default for LqConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 200,
            cg_max_iterations: 500,
            armijo_sigma: 1e-4,
            max_halvings: 30,
            initial: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedPointConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Divergence is declared once ‖ξ_k‖ exceeds this multiple of ‖y_d‖.
    pub divergence_factor: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 1000,
            divergence_factor: 1e6,
        }
    }
}

/// Dual iterate with its derived quantities.
#[derive(Debug, Clone)]
pub struct LqState {
    pub xi: NodalField,
    /// `w = S*ξ`
    pub w: NodalField,
    /// `F(ξ)`
    pub residual: NodalField,
    pub residual_norm: f64,
    pub merit: f64,
}

/// Result of the inexact Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonDirection {
    pub delta: NodalField,
    pub cg_iterations: usize,
    /// CG hit its iteration cap; `delta` is the last iterate.
    pub capped: bool,
}

pub struct LinearQuadraticSolver<'d> {
    disc: &'d Discretization,
    problem: &'d SemilinearProblem,
    state_op: LinearStateOperator,
}

impl<'d> LinearQuadraticSolver<'d> {
    pub fn new(disc: &'d Discretization, problem: &'d SemilinearProblem) -> Result<Self> {
        Self::with_counters(disc, problem, Arc::new(SolveCounters::new()))
    }

    pub fn with_counters(
        disc: &'d Discretization,
        problem: &'d SemilinearProblem,
        counters: Arc<SolveCounters>,
    ) -> Result<Self> {
        if !problem.is_linear() {
            return Err(Error::InvalidArgument(format!(
                "the dual Newton method needs a linear state equation, got alpha = {}",
                problem.alpha
            )));
        }
        disc.mesh().check_field(&problem.y_d)?;
        let state_op = LinearStateOperator::new(disc, counters)?;
        Ok(Self {
            disc,
            problem,
            state_op,
        })
    }

    pub fn counters(&self) -> &Arc<SolveCounters> {
        self.state_op.counters()
    }

    /// `S` applied to a load vector.
    pub fn apply_s(&self, load: &[f64]) -> NodalField {
        self.state_op.apply_load(load)
    }

    /// `S*ξ = (K + 10M)⁻¹ M ξ`
    pub fn apply_s_adjoint(&self, xi: &[f64]) -> NodalField {
        self.state_op.apply_load(&self.disc.load_of(xi))
    }

    /// `F(ξ) = ξ + u_b S(∫ sign(w) φ) - y_d` for `w = S*ξ`. Returns `(F, w)`.
    pub fn residual(&self, xi: &NodalField) -> (NodalField, NodalField) {
        let w = self.apply_s_adjoint(xi.values());
        let f = self.residual_at(xi, &w);
        (f, w)
    }

    /// `F(ξ)` for a known `w = S*ξ`.
    pub fn residual_at(&self, xi: &NodalField, w: &NodalField) -> NodalField {
        let ub = self.problem.u_bound;
        let mut f = xi.values().to_vec();
        axpy(-1.0, self.problem.y_d.values(), &mut f);
        if ub != 0.0 {
            let su = self.apply_s(&integrate_sign_with(self.disc.mesh(), w, self.disc.parallelism()));
            axpy(ub, su.values(), &mut f);
        }
        NodalField::new(f)
    }

    /// `Φ(ξ) = ½‖ξ - y_d‖² + u_b ‖w‖_{L¹}` with `w = S*ξ`.
    pub fn merit(&self, xi: &NodalField, w: &NodalField) -> f64 {
        let mut d = xi.values().to_vec();
        axpy(-1.0, self.problem.y_d.values(), &mut d);
        let mut phi = 0.5 * self.disc.inner(&d, &d);
        if self.problem.u_bound != 0.0 {
            phi += self.problem.u_bound * l1_norm_with(self.disc.mesh(), w, self.disc.parallelism());
        }
        phi
    }

    /// `G(ξ) δ = δ + u_b S D(w) S*δ`.
    pub fn apply_g(&self, d: &SignDerivativeMatrix, delta: &[f64]) -> Vec<f64> {
        let mut out = delta.to_vec();
        let ub = self.problem.u_bound;
        if ub != 0.0 {
            let sd = self.apply_s_adjoint(delta);
            let y = self.apply_s(&d.mul_vec(sd.values()));
            axpy(ub, y.values(), &mut out);
        }
        out
    }

    pub fn sign_derivative(&self, w: &NodalField) -> SignDerivativeMatrix {
        assemble_sign_derivative_with(self.disc.mesh(), self.disc.pattern(), w, self.disc.parallelism())
    }

    /// Approximately solves `G(ξ) δ = -F` by CG in the mass inner product
    /// to relative residual `min(0.1, √‖F‖)`.
    pub fn newton_step(
        &self,
        d: &SignDerivativeMatrix,
        residual: &NodalField,
        max_iterations: usize,
    ) -> NewtonDirection {
        let f_norm = self.disc.l2_norm(residual.values());
        let forcing = 0.1f64.min(f_norm.sqrt());
        let target = forcing * f_norm;
        let n = residual.len();
        let mut x = vec![0.0; n];
        let mut r: Vec<f64> = residual.values().iter().map(|v| -v).collect();
        let mut p = r.clone();
        let mut rr = self.disc.inner(&r, &r);
        let mut iterations = 0;
        let mut capped = false;
        while rr.sqrt() > target {
            if iterations == max_iterations {
                capped = true;
                break;
            }
            let gp = self.apply_g(d, &p);
            let curvature = self.disc.inner(&p, &gp);
            let alpha = rr / curvature;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &gp, &mut r);
            iterations += 1;
            let rr_new = self.disc.inner(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for (pi, ri) in p.iter_mut().zip(&r) {
                *pi = ri + beta * *pi;
            }
        }
        NewtonDirection {
            delta: NodalField::new(x),
            cg_iterations: iterations,
            capped,
        }
    }

    fn initial_state(&self, initial: &Option<NodalField>) -> Result<LqState> {
        let xi = match initial {
            Some(x) => {
                self.disc.mesh().check_field(x)?;
                x.clone()
            }
            None => self.problem.y_d.clone(),
        };
        let (f, w) = self.residual(&xi);
        let residual_norm = self.disc.l2_norm(f.values());
        let merit = self.merit(&xi, &w);
        Ok(LqState {
            xi,
            w,
            residual: f,
            residual_norm,
            merit,
        })
    }

    fn base_report(&self) -> RunReport {
        let mesh = self.disc.mesh();
        RunReport {
            subdivisions: mesh.subdivisions(),
            nodes: mesh.num_nodes(),
            u_bound: self.problem.u_bound,
            ..Default::default()
        }
    }

    /// Globalized semismooth Newton iteration `ξ ← ξ - t G(ξ)⁻¹ F(ξ)`.
    pub fn solve(&self, config: &LqConfig) -> Result<RunReport> {
        let start = Instant::now();
        let counters = Arc::clone(self.counters());
        let mut report = self.base_report();
        let mut state = self.initial_state(&config.initial)?;
        let mut history = vec![state.xi.clone()];

        for k in 0..config.max_iterations {
            if state.residual_norm <= config.tolerance {
                report.converged = true;
                break;
            }
            let d = self.sign_derivative(&state.w);
            report.degenerate_elements = report.degenerate_elements.max(d.level_set.degenerate.len());
            let dir = self.newton_step(&d, &state.residual, config.cg_max_iterations);
            if dir.capped {
                warn!("CG reached {} iterations at outer step {k}", config.cg_max_iterations);
                report
                    .warnings
                    .push(format!("iteration {k}: CG capped at {} iterations", dir.cg_iterations));
            }

            // Φ along ξ + tδ only needs S*δ, since w is linear in ξ.
            let dw = self.apply_s_adjoint(dir.delta.values());
            let slope = self.disc.inner(state.residual.values(), dir.delta.values());
            let mut t = 1.0;
            let mut accepted = None;
            let mut residual_fallback = None;
            // Close to the solution the Armijo decrease drops below the rounding
            // level of Φ; a full step that reduces ‖F‖ is taken instead.
            if -slope <= MERIT_RESOLUTION * state.merit.abs().max(1.0) {
                let xi_t = shifted(&state.xi, 1.0, &dir.delta);
                let w_t = shifted(&state.w, 1.0, &dw);
                let f_t = self.residual_at(&xi_t, &w_t);
                let norm_t = self.disc.l2_norm(f_t.values());
                if norm_t <= (1.0 - config.armijo_sigma) * state.residual_norm {
                    let phi_t = self.merit(&xi_t, &w_t);
                    residual_fallback = Some((xi_t, w_t, phi_t, f_t, norm_t));
                }
            }
            for _ in 0..=config.max_halvings {
                if residual_fallback.is_some() {
                    break;
                }
                let xi_t = shifted(&state.xi, t, &dir.delta);
                let w_t = shifted(&state.w, t, &dw);
                let phi_t = self.merit(&xi_t, &w_t);
                accepted = Some((xi_t, w_t, phi_t));
                if phi_t <= state.merit + config.armijo_sigma * t * slope {
                    break;
                }
                t *= 0.5;
            }
            let (xi, w, merit, f, residual_norm) = match residual_fallback {
                Some(trial) => trial,
                None => {
                    let (xi, w, merit) = accepted.expect("at least one trial step");
                    if merit > state.merit + config.armijo_sigma * t * slope {
                        report
                            .warnings
                            .push(format!("iteration {k}: Armijo search failed, taking t = {t:e}"));
                    }
                    let f = self.residual_at(&xi, &w);
                    let residual_norm = self.disc.l2_norm(f.values());
                    (xi, w, merit, f, residual_norm)
                }
            };
            debug!("lq iter {k}: |F| = {:.3e} -> {residual_norm:.3e}, t = {t}, cg = {}", state.residual_norm, dir.cg_iterations);
            report.trace.push(IterationRecord {
                iteration: k,
                residual: state.residual_norm,
                merit: state.merit,
                step: t,
                accepted: true,
                cg_iterations: dir.cg_iterations,
                solves: counters.solves(),
                factorizations: counters.factorizations(),
                ..Default::default()
            });
            state = LqState {
                xi,
                w,
                residual: f,
                residual_norm,
                merit,
            };
            history.push(state.xi.clone());
            report.iterations = k + 1;
        }
        if !report.converged && state.residual_norm <= config.tolerance {
            report.converged = true;
        }

        let last = history.last().unwrap();
        let errors: Vec<f64> = history[..history.len() - 1]
            .iter()
            .map(|x| {
                let mut d = x.values().to_vec();
                axpy(-1.0, last.values(), &mut d);
                self.disc.l2_norm(&d)
            })
            .collect();
        report.contraction_factors = errors.windows(2).map(|e| e[1] / e[0]).collect();

        let ls = crate::signum::extract_zero_levelset_with(self.disc.mesh(), &state.w, self.disc.parallelism());
        report.boundary_cuts = ls.boundary_cuts;
        report.final_residual = state.residual_norm;
        report.final_objective = state.merit;
        report.solves = counters.solves();
        report.factorizations = counters.factorizations();
        report.w = state.w;
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok(report)
    }

    /// Fixed-point iteration `ξ ← y_d - u_b S sign(S*ξ)`.
    pub fn fixed_point(&self, config: &FixedPointConfig) -> Result<RunReport> {
        let start = Instant::now();
        let counters = Arc::clone(self.counters());
        let mut report = self.base_report();
        let y_d = &self.problem.y_d;
        let limit = config.divergence_factor * self.disc.l2_norm(y_d.values());
        let mut xi = y_d.clone();
        let mut w = self.apply_s_adjoint(xi.values());
        let mut previous_step: Option<f64> = None;
        let mut step_norm = f64::INFINITY;

        for k in 0..config.max_iterations {
            let su = self.apply_s(&integrate_sign_with(self.disc.mesh(), &w, self.disc.parallelism()));
            let mut next = y_d.values().to_vec();
            axpy(-self.problem.u_bound, su.values(), &mut next);
            let mut diff = next.clone();
            axpy(-1.0, xi.values(), &mut diff);
            step_norm = self.disc.l2_norm(&diff);
            if let Some(prev) = previous_step {
                if prev > 0.0 {
                    report.contraction_factors.push(step_norm / prev);
                }
            }
            previous_step = Some(step_norm);
            xi = NodalField::new(next);
            report.iterations = k + 1;
            report.trace.push(IterationRecord {
                iteration: k,
                residual: step_norm,
                step: 1.0,
                accepted: true,
                solves: counters.solves(),
                factorizations: counters.factorizations(),
                ..Default::default()
            });
            if step_norm <= config.tolerance {
                report.converged = true;
                break;
            }
            if !(self.disc.l2_norm(xi.values()) <= limit) {
                report.diverged = true;
                break;
            }
            w = self.apply_s_adjoint(xi.values());
        }
        if report.converged {
            w = self.apply_s_adjoint(xi.values());
        }
        // ξ = y_d - y at a fixed point, so ½‖ξ‖² is the tracking objective.
        report.final_objective = 0.5 * self.disc.inner(xi.values(), xi.values());
        report.final_residual = step_norm;
        report.solves = counters.solves();
        report.factorizations = counters.factorizations();
        report.boundary_cuts = crate::signum::extract_zero_levelset_with(self.disc.mesh(), &w, self.disc.parallelism()).boundary_cuts;
        report.w = w;
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

fn shifted(base: &NodalField, t: f64, dir: &NodalField) -> NodalField {
    let mut v = base.values().to_vec();
    axpy(t, dir.values(), &mut v);
    NodalField::new(v)
}
