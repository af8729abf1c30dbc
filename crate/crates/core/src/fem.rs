//! P1 finite element operators and the state/adjoint solvers.
//!
//! All L² pairings use the consistent mass matrix. The nonlinear reaction
//! term `a(y_h)` is integrated with the three-point edge-midpoint rule, and
//! the state Jacobian, adjoint operator and second-derivative coefficient are
//! the exact derivatives of that discrete residual, so the discrete reduced
//! gradient and Hessian are consistent to round-off.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{map_indices, Parallelism};
use crate::mesh::{NodalField, TriangularMesh};
use crate::problem::SemilinearProblem;
use crate::sparse::{axpy, max_abs, CsrMatrix, EnvelopeCholesky, SolveCounters, SparsityPattern};

/// Maximum Newton steps of the state solve.
pub const STATE_MAX_NEWTON_STEPS: usize = 50;
/// Maximum step halvings per state Newton step.
pub const STATE_MAX_HALVINGS: usize = 30;
/// The state solve stops once a full Newton step is below this size,
/// relative to `1 + ‖y‖_∞`.
pub const STATE_STEP_TOLERANCE: f64 = 1e-10;

/// Mesh plus the operators every solver needs.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: TriangularMesh,
    pattern: SparsityPattern,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    parallelism: Parallelism,
}

impl Discretization {
    pub fn new(mesh: TriangularMesh) -> Self {
        Self::with_parallelism(mesh, Parallelism::default())
    }

    pub fn with_parallelism(mesh: TriangularMesh, parallelism: Parallelism) -> Self {
        let pattern = SparsityPattern::from_mesh(&mesh);
        let mass = assemble_mass(&mesh, &pattern, parallelism);
        let stiffness = assemble_stiffness(&mesh, &pattern, parallelism);
        Self {
            mesh,
            pattern,
            mass,
            stiffness,
            parallelism,
        }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Ok(Self::new(TriangularMesh::uniform(n)?))
    }

    pub fn mesh(&self) -> &TriangularMesh {
        &self.mesh
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn parallelism(&self) -> Parallelism {
        self.parallelism
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// L² inner product of two P1 functions.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.mass.bilinear(a, b)
    }

    pub fn l2_norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Load vector `(∫ u_h φ_i)_i` of a P1 function.
    pub fn load_of(&self, u: &[f64]) -> Vec<f64> {
        self.mass.mul_vec(u)
    }

    pub fn weighted_mass(&self, c: &NodalField) -> CsrMatrix {
        assemble_weighted_mass(&self.mesh, &self.pattern, c, self.parallelism)
    }

    /// Mass-type matrix `Σ_T Σ_q |T|/3 g_q φ_i(m_q) φ_j(m_q)` over the edge
    /// midpoints `m_q`, with `g` evaluated pointwise at the midpoints.
    pub fn midpoint_weighted_mass<G>(&self, fields: &[&[f64]], g: G) -> CsrMatrix
    where
        G: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let mesh = &self.mesh;
        let local = map_indices(mesh.num_elements(), self.parallelism, |e| {
            let tri = mesh.element(e);
            let w = mesh.element_area(e) / 3.0;
            let mut m = [[0.0; 3]; 3];
            let mut at = vec![0.0; fields.len()];
            for q in 0..3 {
                let (a, b) = (q, (q + 1) % 3);
                for (slot, f) in at.iter_mut().zip(fields) {
                    *slot = 0.5 * (f[tri[a]] + f[tri[b]]);
                }
                let c = w * g(&at) * 0.25;
                m[a][a] += c;
                m[a][b] += c;
                m[b][a] += c;
                m[b][b] += c;
            }
            (e, m)
        });
        self.pattern.assemble(local)
    }

    /// `(Σ_T Σ_q |T|/3 g_q φ_i(m_q))_i` for a pointwise midpoint function `g`.
    pub fn midpoint_load<G>(&self, fields: &[&[f64]], g: G) -> Vec<f64>
    where
        G: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let mesh = &self.mesh;
        let local = map_indices(mesh.num_elements(), self.parallelism, |e| {
            let tri = mesh.element(e);
            let w = mesh.element_area(e) / 3.0;
            let mut l = [0.0; 3];
            let mut at = vec![0.0; fields.len()];
            for q in 0..3 {
                let (a, b) = (q, (q + 1) % 3);
                for (slot, f) in at.iter_mut().zip(fields) {
                    *slot = 0.5 * (f[tri[a]] + f[tri[b]]);
                }
                let c = 0.5 * w * g(&at);
                l[a] += c;
                l[b] += c;
            }
            l
        });
        let mut out = vec![0.0; mesh.num_nodes()];
        for (e, l) in local.into_iter().enumerate() {
            for (k, &v) in mesh.element(e).iter().enumerate() {
                out[v] += l[k];
            }
        }
        out
    }
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(
    mesh: &TriangularMesh,
    pattern: &SparsityPattern,
    parallelism: Parallelism,
) -> CsrMatrix {
    let local = map_indices(mesh.num_elements(), parallelism, |e| {
        let area = mesh.element_area(e);
        let mut m = [[area / 12.0; 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            row[a] = area / 6.0;
        }
        (e, m)
    });
    pattern.assemble(local)
}

/// P1 stiffness matrix with natural (Neumann) boundary conditions.
pub fn assemble_stiffness(
    mesh: &TriangularMesh,
    pattern: &SparsityPattern,
    parallelism: Parallelism,
) -> CsrMatrix {
    let local = map_indices(mesh.num_elements(), parallelism, |e| {
        let g = mesh.basis_gradients(e);
        let area = mesh.element_area(e);
        let mut k = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                k[a][b] = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
        (e, k)
    });
    pattern.assemble(local)
}

/// `∫ c_h φ_i φ_j` for the P1 interpolant `c_h`, integrated exactly.
pub fn assemble_weighted_mass(
    mesh: &TriangularMesh,
    pattern: &SparsityPattern,
    c: &NodalField,
    parallelism: Parallelism,
) -> CsrMatrix {
    let local = map_indices(mesh.num_elements(), parallelism, |e| {
        let tri = mesh.element(e);
        let area = mesh.element_area(e);
        let cv = tri.map(|v| c[v]);
        let mut m = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for (k, ck) in cv.iter().enumerate() {
                    // ∫ λ_k λ_a λ_b = 2|T| p! q! r! / (p + q + r + 2)!
                    let w = if a == b && b == k {
                        area / 10.0
                    } else if a == b || a == k || b == k {
                        area / 30.0
                    } else {
                        area / 60.0
                    };
                    s += ck * w;
                }
                m[a][b] = s;
            }
        }
        (e, m)
    });
    pattern.assemble(local)
}

/// Solution operator of `-Δy + 10y = u` with Neumann conditions, applied to
/// load vectors. Self-adjoint, so it also realizes `S*` on `M ξ`.
#[derive(Debug)]
pub struct LinearStateOperator {
    factor: EnvelopeCholesky,
    counters: Arc<SolveCounters>,
}

impl LinearStateOperator {
    pub fn new(disc: &Discretization, counters: Arc<SolveCounters>) -> Result<Self> {
        let a = disc
            .stiffness()
            .add_scaled(crate::problem::LINEAR_COEFFICIENT, disc.mass());
        let factor = EnvelopeCholesky::factor(&a)?;
        counters.record_factorization();
        Ok(Self { factor, counters })
    }

    pub fn counters(&self) -> &Arc<SolveCounters> {
        &self.counters
    }

    /// `y = (K + 10M)⁻¹ ℓ`
    pub fn apply_load(&self, load: &[f64]) -> NodalField {
        self.counters.record_solve();
        NodalField::new(self.factor.solve(load))
    }
}

/// State, adjoint and second-order solves for the semilinear equation, with
/// a factorization cache keyed by the state at which `A(y) = K + W_{a'(y)}`
/// was formed.
#[derive(Debug)]
pub struct StateSolver<'d> {
    disc: &'d Discretization,
    problem: &'d SemilinearProblem,
    counters: Arc<SolveCounters>,
    cached: Option<(Vec<f64>, EnvelopeCholesky)>,
    linear: Option<EnvelopeCholesky>,
}

impl<'d> StateSolver<'d> {
    pub fn new(
        disc: &'d Discretization,
        problem: &'d SemilinearProblem,
        counters: Arc<SolveCounters>,
    ) -> Result<Self> {
        disc.mesh().check_field(&problem.y_d)?;
        Ok(Self {
            disc,
            problem,
            counters,
            cached: None,
            linear: None,
        })
    }

    pub fn discretization(&self) -> &'d Discretization {
        self.disc
    }

    pub fn problem(&self) -> &'d SemilinearProblem {
        self.problem
    }

    pub fn counters(&self) -> &Arc<SolveCounters> {
        &self.counters
    }

    /// Discrete state residual `K y + Q(a(y)) - rhs`.
    pub fn state_residual(&self, y: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = self.disc.stiffness().mul_vec(y);
        if self.problem.is_linear() {
            let my = self.disc.mass().mul_vec(y);
            for (ri, mi) in r.iter_mut().zip(my) {
                *ri += crate::problem::LINEAR_COEFFICIENT * mi;
            }
        } else {
            let q = self.disc.midpoint_load(&[y], |v| self.problem.a(v[0]));
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri += qi;
            }
        }
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri -= bi;
        }
        r
    }

    /// `A(y) = K + W_{a'(y)}`, the Jacobian of the state residual.
    pub fn system_matrix(&self, y: &[f64]) -> CsrMatrix {
        if self.problem.is_linear() {
            self.disc
                .stiffness()
                .add_scaled(crate::problem::LINEAR_COEFFICIENT, self.disc.mass())
        } else {
            let w = self
                .disc
                .midpoint_weighted_mass(&[y], |v| self.problem.a_prime(v[0]));
            self.disc.stiffness().add_scaled(1.0, &w)
        }
    }

    fn factor_at(&mut self, y: &[f64]) -> Result<&EnvelopeCholesky> {
        if self.problem.is_linear() {
            if self.linear.is_none() {
                let f = EnvelopeCholesky::factor(&self.system_matrix(y))?;
                self.counters.record_factorization();
                self.linear = Some(f);
            }
            return Ok(self.linear.as_ref().unwrap());
        }
        let hit = matches!(&self.cached, Some((key, _)) if key.as_slice() == y);
        if !hit {
            let f = EnvelopeCholesky::factor(&self.system_matrix(y))?;
            self.counters.record_factorization();
            self.cached = Some((y.to_vec(), f));
        }
        Ok(&self.cached.as_ref().unwrap().1)
    }

    /// Solves `A(y) x = rhs`, reusing the cached factorization when possible.
    pub fn solve_linearized(&mut self, y: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
        let counters = Arc::clone(&self.counters);
        let f = self.factor_at(y)?;
        counters.record_solve();
        Ok(f.solve(rhs))
    }

    /// Damped Newton for `K y + Q(a(y)) = rhs` started at `y_init`.
    pub fn solve_state(&mut self, rhs: &[f64], y_init: &NodalField) -> Result<NodalField> {
        let n = self.disc.num_nodes();
        if rhs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rhs.len(),
            });
        }
        self.disc.mesh().check_field(y_init)?;
        let mut y = y_init.values().to_vec();
        let mut res = self.state_residual(&y, rhs);
        let mut res_norm = max_abs(&res);
        if res_norm == 0.0 {
            return Ok(NodalField::new(y));
        }
        for _ in 0..STATE_MAX_NEWTON_STEPS {
            let mut step = self.solve_linearized(&y, &res)?;
            step.iter_mut().for_each(|s| *s = -*s);
            if !step.iter().all(|s| s.is_finite()) {
                return Err(Error::NonFinite("state Newton step".into()));
            }
            // Residuals scale with h², so the step size is the mesh-independent test.
            if max_abs(&step) <= STATE_STEP_TOLERANCE * (1.0 + max_abs(&y)) {
                axpy(1.0, &step, &mut y);
                return Ok(NodalField::new(y));
            }
            let mut t = 1.0;
            let mut trial = y.clone();
            for halving in 0..=STATE_MAX_HALVINGS {
                for ((ti, yi), si) in trial.iter_mut().zip(&y).zip(&step) {
                    *ti = yi + t * si;
                }
                let r = self.state_residual(&trial, rhs);
                let rn = max_abs(&r);
                if rn < res_norm || halving == STATE_MAX_HALVINGS {
                    res = r;
                    res_norm = rn;
                    break;
                }
                t *= 0.5;
            }
            y = trial;
        }
        Err(Error::NonConvergence {
            steps: STATE_MAX_NEWTON_STEPS,
            residual: res_norm,
        })
    }

    /// Adjoint state: `A(y) p = M (y - y_d)`.
    pub fn solve_adjoint(&mut self, y: &NodalField) -> Result<NodalField> {
        self.disc.mesh().check_field(y)?;
        if !y.is_finite() {
            return Err(Error::NonFinite("state passed to adjoint solve".into()));
        }
        let diff: Vec<f64> = y
            .values()
            .iter()
            .zip(self.problem.y_d.values())
            .map(|(a, b)| a - b)
            .collect();
        let rhs = self.disc.load_of(&diff);
        Ok(NodalField::new(self.solve_linearized(y.values(), &rhs)?))
    }

    /// Action of the reduced Hessian `f''(u)` on a load vector:
    /// `A(y)⁻¹ W_{1 - a''(y) p} A(y)⁻¹ ℓ`.
    pub fn apply_f_second(
        &mut self,
        y: &NodalField,
        p: &NodalField,
        load: &[f64],
    ) -> Result<NodalField> {
        let dy = self.solve_linearized(y.values(), load)?;
        let coupling = if self.problem.is_linear() {
            self.disc.mass().mul_vec(&dy)
        } else {
            let w = self.disc.midpoint_weighted_mass(&[y.values(), p.values()], |v| {
                1.0 - self.problem.a_second(v[0]) * v[1]
            });
            w.mul_vec(&dy)
        };
        Ok(NodalField::new(self.solve_linearized(y.values(), &coupling)?))
    }
}
