//! Reduced-space trust-region Newton method for the semilinear problem.
//!
//! The unknown is the switching function `w`, the control is
//! `u = u_b sign(w)` and the reduced objective is `J(w) = f(u_b sign(w))`.
//! At a solution `w = -p`, where `p` is the adjoint state. With the scaled
//! operator
//!
//! ```text
//! T v = v + u_b f''(u) D(w) v
//! ```
//!
//! the Newton system `T δ = -(w + p)` is solved by Steihaug CG in the
//! semi-inner product `⟨a, b⟩_w = aᵀ D(w) b`, in which `T` is self-adjoint.
//! The quadratic model uses `J'(w) δ = u_b (w + p)ᵀ D δ` and the Gauss-Newton
//! operator `H = u_b D T`.

use std::sync::Arc;
use std::time::Instant;

use log::{debug, warn};

use crate::error::{Error, Result};
use crate::fem::{Discretization, StateSolver};
use crate::mesh::NodalField;
use crate::problem::SemilinearProblem;
use crate::report::{IterationRecord, RunReport};
use crate::signum::{assemble_sign_derivative_with, integrate_sign_with, SignDerivativeMatrix};
use crate::sparse::{axpy, max_abs, SolveCounters};

/// Relative size of `⟨d, d⟩_w` below which a CG direction is invisible to `D`.
const ZERO_CURVATURE: f64 = 1e-14;
/// Reductions below this fraction of `J` are treated as rounding noise.
const OBJECTIVE_RESOLUTION: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct TrConfig {
    pub eta1: f64,
    pub eta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub theta1: f64,
    pub theta2: f64,
    /// Initial radius; `max(1, ‖w₀‖_{w₀})` when unset.
    pub delta0: Option<f64>,
    pub max_outer: usize,
    /// Bound for both `‖w + p‖_w` and `‖D (w + p)‖_∞`.
    pub gradient_tolerance: f64,
    pub cg_max_iterations: usize,
    /// Starting switching function; `-p(0)` when unset.
    pub initial: Option<NodalField>,
}

impl Default for TrConfig {
    fn default() -> Self {
        Self {
            eta1: 0.75,
            eta2: 0.25,
            gamma1: 0.5,
            gamma2: 2.0,
            theta1: 1.5,
            theta2: 0.05,
            delta0: None,
            max_outer: 1000,
            gradient_tolerance: 1e-9,
            cg_max_iterations: 500,
            initial: None,
        }
    }
}

impl TrConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.eta2
            && self.eta2 <= self.eta1
            && self.eta1 < 1.0
            && 0.0 < self.gamma1
            && self.gamma1 < 1.0
            && self.gamma2 > 1.0
            && self.theta1 > 1.0
            && self.theta2 > 0.0
            && self.gradient_tolerance > 0.0
            && self.delta0.is_none_or(|d| d > 0.0 && d.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("inconsistent trust-region parameters {self:?}")))
        }
    }
}

/// Iterate together with everything derived from it.
#[derive(Debug, Clone)]
pub struct TrState {
    pub w: NodalField,
    pub y: NodalField,
    pub p: NodalField,
    /// `J(w) = ½‖y - y_d‖²`.
    pub objective: f64,
    /// `r = w + p`; the reduced gradient is the load `u_b D r`.
    pub residual: NodalField,
    pub d: SignDerivativeMatrix,
}

impl TrState {
    /// `‖w + p‖_w`.
    pub fn residual_seminorm(&self) -> f64 {
        self.d.seminorm(self.residual.values())
    }

    /// `‖D (w + p)‖_∞`.
    pub fn gradient_max(&self) -> f64 {
        max_abs(&self.d.mul_vec(self.residual.values()))
    }
}

#[derive(Debug, Clone)]
pub struct SteihaugStep {
    pub delta: NodalField,
    /// `T δ`, accumulated alongside `δ`.
    pub t_delta: NodalField,
    pub boundary_hit: bool,
    pub cg_iterations: usize,
    pub capped: bool,
    /// Absolute stopping tolerance used for the CG residual seminorm.
    pub tolerance: f64,
    /// Residual seminorm `‖T δ + r‖_w` at exit.
    pub final_residual: f64,
}

pub struct TrustRegionSolver<'d> {
    disc: &'d Discretization,
    problem: &'d SemilinearProblem,
    counters: Arc<SolveCounters>,
    // Factorizations at the current iterate survive rejected trials.
    current: StateSolver<'d>,
    trial: StateSolver<'d>,
}

impl<'d> TrustRegionSolver<'d> {
    pub fn new(disc: &'d Discretization, problem: &'d SemilinearProblem) -> Result<Self> {
        Self::with_counters(disc, problem, Arc::new(SolveCounters::default()))
    }

    pub fn with_counters(
        disc: &'d Discretization,
        problem: &'d SemilinearProblem,
        counters: Arc<SolveCounters>,
    ) -> Result<Self> {
        Ok(Self {
            disc,
            problem,
            current: StateSolver::new(disc, problem, Arc::clone(&counters))?,
            trial: StateSolver::new(disc, problem, Arc::clone(&counters))?,
            counters,
        })
    }

    pub fn counters(&self) -> &Arc<SolveCounters> {
        &self.counters
    }

    fn control_load(&self, w: &NodalField) -> Vec<f64> {
        let mut b = integrate_sign_with(self.disc.mesh(), w, self.disc.parallelism());
        b.iter_mut().for_each(|v| *v *= self.problem.u_bound);
        b
    }

    fn objective(&self, y: &NodalField) -> f64 {
        let diff: Vec<f64> = y
            .values()
            .iter()
            .zip(self.problem.y_d.values())
            .map(|(a, b)| a - b)
            .collect();
        0.5 * self.disc.inner(&diff, &diff)
    }

    /// `J(y₀) - J(y₁) = ½ ⟨y₀ - y₁, y₀ + y₁ - 2 y_d⟩`, free of the cancellation
    /// in subtracting two nearly equal objective values.
    fn objective_decrease(&self, y0: &NodalField, y1: &NodalField) -> f64 {
        let yd = self.problem.y_d.values();
        let (diff, sum): (Vec<f64>, Vec<f64>) = y0
            .values()
            .iter()
            .zip(y1.values())
            .zip(yd)
            .map(|((a, b), d)| (a - b, (a - d) + (b - d)))
            .unzip();
        0.5 * self.disc.inner(&diff, &sum)
    }

    fn state_with(solver: &mut StateSolver<'d>, load: &[f64], warm: &NodalField) -> Result<NodalField> {
        match solver.solve_state(load, warm) {
            Ok(y) => Ok(y),
            Err(e) => {
                debug!("state Newton failed from warm start ({e}), restarting from zero");
                solver.solve_state(load, &NodalField::zeros(load.len()))
            }
        }
    }

    fn complete_state(&mut self, w: NodalField, y: NodalField) -> Result<TrState> {
        let p = self.current.solve_adjoint(&y)?;
        let objective = self.objective(&y);
        let mut r = w.values().to_vec();
        axpy(1.0, p.values(), &mut r);
        let d = assemble_sign_derivative_with(self.disc.mesh(), self.disc.pattern(), &w, self.disc.parallelism());
        Ok(TrState {
            w,
            y,
            p,
            objective,
            residual: NodalField::new(r),
            d,
        })
    }

    /// State, adjoint, `J`, `r = w + p` and `D(w)` at `w`.
    pub fn reduced_objective_and_gradient(&mut self, w: &NodalField) -> Result<TrState> {
        self.disc.mesh().check_field(w)?;
        if !w.is_finite() {
            return Err(Error::NonFinite("switching function".into()));
        }
        let load = self.control_load(w);
        let y = Self::state_with(&mut self.current, &load, &NodalField::zeros(load.len()))?;
        self.complete_state(w.clone(), y)
    }

    /// `f''(u) ℓ` at the state and adjoint of `state`.
    pub fn apply_f_second(&mut self, state: &TrState, load: &[f64]) -> Result<NodalField> {
        self.current.apply_f_second(&state.y, &state.p, load)
    }

    /// `T v = v + u_b f''(u) D v`.
    pub fn apply_t(&mut self, state: &TrState, v: &[f64]) -> Result<NodalField> {
        let dv = state.d.mul_vec(v);
        let mut out = v.to_vec();
        if self.problem.u_bound != 0.0 && max_abs(&dv) > 0.0 {
            let f2 = self.apply_f_second(state, &dv)?;
            axpy(self.problem.u_bound, f2.values(), &mut out);
        }
        Ok(NodalField::new(out))
    }

    /// Gauss-Newton operator as a load vector, `H v = u_b D T v`.
    pub fn apply_h(&mut self, state: &TrState, v: &[f64]) -> Result<Vec<f64>> {
        let tv = self.apply_t(state, v)?;
        let mut out = state.d.mul_vec(tv.values());
        out.iter_mut().for_each(|x| *x *= self.problem.u_bound);
        Ok(out)
    }

    /// `pred = -u_b (⟨r, δ⟩_w + ½ ⟨δ, T δ⟩_w)`.
    pub fn predicted_reduction(&self, state: &TrState, delta: &[f64], t_delta: &[f64]) -> f64 {
        let linear = state.d.pair(state.residual.values(), delta);
        let quadratic = state.d.pair(delta, t_delta);
        -self.problem.u_bound * (linear + 0.5 * quadratic)
    }

    /// Absolute CG tolerance `min(g^θ₁, θ₂ g)` with `g = ‖w - p‖_w`.
    pub fn cg_tolerance(&self, state: &TrState, config: &TrConfig) -> f64 {
        let mut v = state.w.values().to_vec();
        axpy(-1.0, state.p.values(), &mut v);
        let g = state.d.seminorm(&v);
        g.powf(config.theta1).min(config.theta2 * g)
    }

    /// Steihaug CG for `T δ = -r` in `⟨·,·⟩_w` inside `‖δ‖_w ≤ radius`.
    pub fn steihaug_step(&mut self, state: &TrState, radius: f64, config: &TrConfig) -> Result<SteihaugStep> {
        let n = state.w.len();
        let tolerance = self.cg_tolerance(state, config);
        let d_pair = |a: &[f64], b: &[f64]| state.d.pair(a, b);
        let mut z = vec![0.0; n];
        let mut tz = vec![0.0; n];
        let mut res: Vec<f64> = state.residual.values().iter().map(|v| -v).collect();
        let mut rr = d_pair(&res, &res);
        let rr0 = rr;
        let mut dir = res.clone();
        let mut iterations = 0;
        let mut boundary_hit = false;
        let mut capped = false;

        let to_boundary = |z: &[f64], dir: &[f64]| {
            let dd = d_pair(dir, dir);
            let zd = d_pair(z, dir);
            let zz = d_pair(z, z);
            let disc = (zd * zd + dd * (radius * radius - zz)).max(0.0);
            (-zd + disc.sqrt()) / dd
        };

        while rr.max(0.0).sqrt() > tolerance {
            if iterations == config.cg_max_iterations {
                capped = true;
                break;
            }
            let dd = d_pair(&dir, &dir);
            if dd <= ZERO_CURVATURE * rr0 {
                break;
            }
            let tdir = self.apply_t(state, &dir)?;
            let curvature = d_pair(&dir, tdir.values());
            iterations += 1;
            let alpha = rr / curvature;
            let leaves = curvature <= 0.0 || {
                let mut zt = z.clone();
                axpy(alpha, &dir, &mut zt);
                d_pair(&zt, &zt) >= radius * radius
            };
            if leaves {
                let sigma = to_boundary(&z, &dir);
                axpy(sigma, &dir, &mut z);
                axpy(sigma, tdir.values(), &mut tz);
                axpy(-sigma, tdir.values(), &mut res);
                rr = d_pair(&res, &res);
                boundary_hit = true;
                break;
            }
            axpy(alpha, &dir, &mut z);
            axpy(alpha, tdir.values(), &mut tz);
            axpy(-alpha, tdir.values(), &mut res);
            let rr_new = d_pair(&res, &res);
            let beta = rr_new / rr;
            rr = rr_new;
            for (di, ri) in dir.iter_mut().zip(&res) {
                *di = ri + beta * *di;
            }
        }
        Ok(SteihaugStep {
            delta: NodalField::new(z),
            t_delta: NodalField::new(tz),
            boundary_hit,
            cg_iterations: iterations,
            capped,
            tolerance,
            final_residual: rr.max(0.0).sqrt(),
        })
    }

    fn initial_state(&mut self, config: &TrConfig) -> Result<TrState> {
        let w0 = match &config.initial {
            Some(w) => w.clone(),
            None => {
                let zero = NodalField::zeros(self.disc.num_nodes());
                let y = Self::state_with(&mut self.current, &vec![0.0; zero.len()], &zero)?;
                let p = self.current.solve_adjoint(&y)?;
                NodalField::new(p.values().iter().map(|v| -v).collect())
            }
        };
        self.reduced_objective_and_gradient(&w0)
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

    /// Trust-region globalized Newton iteration on `J(w)`.
    pub fn solve(&mut self, config: &TrConfig) -> Result<RunReport> {
        config.validate()?;
        let start = Instant::now();
        let counters = Arc::clone(&self.counters);
        let mut report = self.base_report();
        let mut state = self.initial_state(config)?;
        let mut radius = config
            .delta0
            .unwrap_or_else(|| state.d.seminorm(state.w.values()).max(1.0));
        let mut accepted_residuals = vec![state.residual_seminorm()];

        for k in 0..config.max_outer {
            report.degenerate_elements = report.degenerate_elements.max(state.d.level_set.degenerate.len());
            let g = state.residual_seminorm();
            if g <= config.gradient_tolerance && state.gradient_max() <= config.gradient_tolerance {
                report.converged = true;
                break;
            }
            let step = self.steihaug_step(&state, radius, config)?;
            if step.capped {
                warn!("CG reached {} iterations at outer step {k}", config.cg_max_iterations);
                report
                    .warnings
                    .push(format!("iteration {k}: CG capped at {} iterations", step.cg_iterations));
            }
            let step_norm = state.d.seminorm(step.delta.values());
            let pred = self.predicted_reduction(&state, step.delta.values(), step.t_delta.values());

            let mut w_trial = state.w.values().to_vec();
            axpy(1.0, step.delta.values(), &mut w_trial);
            let w_trial = NodalField::new(w_trial);
            let load = self.control_load(&w_trial);
            let trial = match Self::state_with(&mut self.trial, &load, &state.y) {
                Ok(y) => Some(y),
                Err(e) => {
                    report
                        .warnings
                        .push(format!("iteration {k}: state solve failed at trial point ({e})"));
                    None
                }
            };
            let (ared, rho) = match &trial {
                Some(y) => {
                    let ared = self.objective_decrease(&state.y, y);
                    let noise = OBJECTIVE_RESOLUTION * state.objective.abs().max(f64::MIN_POSITIVE);
                    let rho = if pred <= 0.0 {
                        f64::NEG_INFINITY
                    } else if pred <= noise && ared.abs() <= noise {
                        // Neither reduction is resolvable in floating point.
                        1.0
                    } else {
                        ared / pred
                    };
                    (Some(ared), rho)
                }
                None => (None, f64::NEG_INFINITY),
            };
            let accepted = rho >= config.eta2;
            debug!(
                "tr iter {k}: J = {:.10e}, |r|_w = {g:.3e}, radius = {radius:.3e}, |δ|_w = {step_norm:.3e}, pred = {pred:.3e}, ρ = {rho:.4}, cg = {}",
                state.objective, step.cg_iterations
            );
            report.trace.push(IterationRecord {
                iteration: k,
                residual: g,
                merit: state.objective,
                radius: Some(radius),
                step: rho,
                accepted,
                boundary_hit: step.boundary_hit,
                cg_iterations: step.cg_iterations,
                pred: Some(pred),
                ared,
                solves: counters.solves(),
                factorizations: counters.factorizations(),
            });
            report.iterations = k + 1;

            if accepted {
                radius = if rho >= config.eta1 {
                    radius.max(config.gamma2 * step_norm)
                } else {
                    radius
                };
                std::mem::swap(&mut self.current, &mut self.trial);
                state = self.complete_state(w_trial, trial.expect("accepted trial has a state"))?;
                accepted_residuals.push(state.residual_seminorm());
            } else {
                radius = if step_norm > 0.0 {
                    config.gamma1 * step_norm
                } else {
                    config.gamma1 * radius
                };
            }
        }
        if !report.converged
            && state.residual_seminorm() <= config.gradient_tolerance
            && state.gradient_max() <= config.gradient_tolerance
        {
            report.converged = true;
        }

        report.contraction_factors = accepted_residuals
            .windows(2)
            .filter(|e| e[0] > 0.0)
            .map(|e| e[1] / e[0])
            .collect();
        report.boundary_cuts = state.d.level_set.boundary_cuts;
        report.final_residual = state.residual_seminorm();
        report.final_objective = state.objective;
        report.solves = counters.solves();
        report.factorizations = counters.factorizations();
        report.w = state.w;
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lqnewton::{LinearQuadraticSolver, LqConfig};
    use crate::mesh::TriangularMesh;
    use crate::sparse::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, alpha: f64, ub: f64) -> (Discretization, SemilinearProblem) {
        let disc = Discretization::uniform(n).unwrap();
        let p = SemilinearProblem::benchmark(disc.mesh(), alpha, ub).unwrap();
        (disc, p)
    }

    fn smooth_w(mesh: &TriangularMesh) -> NodalField {
        mesh.interpolate(|x1, x2| (2.0 * x1).sin() + x2 * x2 - 0.3 + 0.2 * x1 * x2)
            .unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn t_is_self_adjoint_in_the_seminorm() {
        let (disc, p) = setup(12, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        let v1 = random(disc.num_nodes(), 1);
        let v2 = random(disc.num_nodes(), 2);
        let t1 = s.apply_t(&st, &v1).unwrap();
        let t2 = s.apply_t(&st, &v2).unwrap();
        let a = st.d.pair(&v1, t2.values());
        let b = st.d.pair(t1.values(), &v2);
        assert!(rel(a, b) < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn h_annihilates_w_and_is_symmetric() {
        let (disc, p) = setup(12, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        let hw = s.apply_h(&st, st.w.values()).unwrap();
        let v = random(disc.num_nodes(), 3);
        let hv = s.apply_h(&st, &v).unwrap();
        assert!(max_abs(&hw) <= 1e-12 * max_abs(&hv).max(1.0), "{}", max_abs(&hw));
        let v2 = random(disc.num_nodes(), 4);
        let hv2 = s.apply_h(&st, &v2).unwrap();
        let a = dot(&v2, &hv);
        let b = dot(&v, &hv2);
        assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn h_is_psd_for_the_linear_state() {
        let (disc, p) = setup(10, 0.0, 20.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        for seed in 0..5 {
            let v = random(disc.num_nodes(), 10 + seed);
            let hv = s.apply_h(&st, &v).unwrap();
            let q = dot(&v, &hv);
            let dv = st.d.mul_vec(&v);
            let sdv = s.apply_f_second(&st, &dv).unwrap();
            let expected = 20.0 * (st.d.pair(&v, &v) + 20.0 * dot(&dv, sdv.values()));
            assert!(q >= 0.0);
            assert!(rel(q, expected) < 1e-10);
        }
    }

    #[test]
    fn boundary_steps_land_on_the_radius() {
        let (disc, p) = setup(12, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        let radius = 1e-3 * st.residual_seminorm();
        let step = s.steihaug_step(&st, radius, &TrConfig::default()).unwrap();
        assert!(step.boundary_hit);
        assert!(rel(st.d.seminorm(step.delta.values()), radius) < 1e-10);
    }

    #[test]
    fn interior_steps_meet_the_cg_tolerance() {
        let (disc, p) = setup(12, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        let step = s.steihaug_step(&st, 1e12, &TrConfig::default()).unwrap();
        assert!(!step.boundary_hit);
        assert!(step.final_residual <= step.tolerance);
        // The recursively updated residual matches a fresh evaluation.
        let t = s.apply_t(&st, step.delta.values()).unwrap();
        let mut fresh = t.values().to_vec();
        axpy(1.0, st.residual.values(), &mut fresh);
        assert!((st.d.seminorm(&fresh) - step.final_residual).abs() <= 1e-8 * st.residual_seminorm());
    }

    #[test]
    fn pred_is_reproduced_from_h() {
        let (disc, p) = setup(12, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let st = s.reduced_objective_and_gradient(&smooth_w(disc.mesh())).unwrap();
        let step = s.steihaug_step(&st, 1e12, &TrConfig::default()).unwrap();
        let pred = s.predicted_reduction(&st, step.delta.values(), step.t_delta.values());
        let hd = s.apply_h(&st, step.delta.values()).unwrap();
        let grad: Vec<f64> = st.d.mul_vec(st.residual.values()).iter().map(|v| v * 50.0).collect();
        let lin = dot(&grad, step.delta.values());
        let quad = dot(step.delta.values(), &hd);
        let recomputed = -(lin + 0.5 * quad);
        assert!(pred > 0.0);
        assert!(rel(pred, recomputed) < 1e-10, "{pred} vs {recomputed}");
    }

    #[test]
    fn f_second_matches_adjoint_differences() {
        let (disc, p) = setup(10, 3.0, 50.0);
        let mut solver = StateSolver::new(&disc, &p, Arc::new(SolveCounters::default())).unwrap();
        let mesh = disc.mesh();
        let u = mesh.interpolate(|x1, x2| 20.0 * (x1 + 0.5 * x2).sin()).unwrap();
        let v = mesh.interpolate(|x1, x2| 1.0 + x1 * x2).unwrap();
        let mut adjoint_at = |t: f64| {
            let ut: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a + t * b).collect();
            let y = solver.solve_state(&disc.load_of(&ut), &NodalField::zeros(ut.len())).unwrap();
            let p = solver.solve_adjoint(&y).unwrap();
            (y, p)
        };
        let t = 1e-4;
        let (_, pp) = adjoint_at(t);
        let (_, pm) = adjoint_at(-t);
        let (y0, p0) = adjoint_at(0.0);
        let fd: Vec<f64> = pp.values().iter().zip(pm.values()).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let exact = solver.apply_f_second(&y0, &p0, &disc.load_of(v.values())).unwrap();
        let mut err = fd.clone();
        axpy(-1.0, exact.values(), &mut err);
        assert!(disc.l2_norm(&err) <= 1e-4 * disc.l2_norm(exact.values()));
    }

    #[test]
    fn zero_bound_converges_immediately() {
        let (disc, p) = setup(8, 3.0, 0.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let r = s.solve(&TrConfig::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        // y = 0, so J = ½‖y_d‖².
        let yd = p.y_d.values();
        assert!(rel(r.final_objective, 0.5 * disc.inner(yd, yd)) < 1e-14);
    }

    #[test]
    fn semilinear_run_decreases_objective_and_converges() {
        let (disc, p) = setup(8, 3.0, 50.0);
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let r = s.solve(&TrConfig::default()).unwrap();
        assert!(r.converged, "{} iterations, residual {}", r.iterations, r.final_residual);
        let accepted: Vec<f64> = r.trace.iter().filter(|t| t.accepted).map(|t| t.merit).collect();
        for pair in accepted.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        for rec in &r.trace {
            if rec.accepted {
                assert!(rec.ared.unwrap() >= 0.25 * rec.pred.unwrap());
            }
        }
        let mut radii = r.trace.iter().zip(r.trace.iter().skip(1));
        assert!(radii.all(|(a, b)| a.accepted || b.radius.unwrap() < a.radius.unwrap()));
    }

    #[test]
    fn linear_case_agrees_with_dual_newton() {
        let (disc, p) = setup(8, 0.0, 50.0);
        let lq = LinearQuadraticSolver::new(&disc, &p).unwrap().solve(&LqConfig::default()).unwrap();
        let mut s = TrustRegionSolver::new(&disc, &p).unwrap();
        let tr = s.solve(&TrConfig::default()).unwrap();
        assert!(lq.converged && tr.converged);
        let sa = crate::signum::sign_areas(disc.mesh(), &lq.w);
        let sb = crate::signum::sign_areas(disc.mesh(), &tr.w);
        assert!((sa.0 - sb.0).abs() < 0.05, "{sa:?} vs {sb:?}");
    }

    #[test]
    fn config_validation() {
        assert!(TrConfig::default().validate().is_ok());
        let bad = TrConfig {
            eta2: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrConfig {
            gamma1: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
