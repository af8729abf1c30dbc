//! Newton-type solvers for bang-bang optimal control of elliptic equations.
//!
//! The controls of
//!
//! ```text
//! min ½‖y - y_d‖²  s.t.  -Δy + 10y + αy³ = u in (-1,1)²,  ∂y/∂ν = 0,  |u| ≤ u_b
//! ```
//!
//! are represented implicitly as `u = u_b sign(w)` for a P1 switching
//! function `w`. The modules build on each other:
//!
//! - [`mesh`]: structured triangulation and P1 fields
//! - [`fem`]: mass/stiffness assembly and state/adjoint solves
//! - [`signum`]: exact integration of `sign(w_h)` and the level-set measure `sign'(w)`
//! - [`lqnewton`]: dual semismooth Newton and fixed-point iterations (α = 0)
//! - [`trnewton`]: reduced trust-region Newton method (any α ≥ 0)

pub mod error;
pub mod exec;
pub mod fem;
pub mod lqnewton;
pub mod mesh;
pub mod problem;
pub mod report;
pub mod signum;
pub mod sparse;
pub mod trnewton;

pub use error::{Error, Result};
pub use exec::Parallelism;
pub use fem::{Discretization, LinearStateOperator, StateSolver};
pub use lqnewton::{FixedPointConfig, LinearQuadraticSolver, LqConfig};
pub use mesh::{NodalField, TriangularMesh};
pub use problem::SemilinearProblem;
pub use report::{IterationRecord, RunReport};
pub use trnewton::{SteihaugStep, TrConfig, TrState, TrustRegionSolver};

