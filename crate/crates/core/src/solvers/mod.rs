//! Optimization back-ends: a simplex LP solver, a pairwise decomposition
//! solver for box-plus-one-equality QPs, and a pivoted LU linear solver.
//!
//! Every solve returns an optimality certificate computed from the original
//! problem data, so callers can audit a result independently of the
//! iteration that produced it.

mod linsys;
mod lp;
mod qp;

use serde::{Deserialize, Serialize};

pub use linsys::{solve_linear_system, LuFactors};
pub use lp::{solve_lp, LpProblem};
pub use qp::{solve_qp_box_eq, QpBoxEqProblem};

pub const DEFAULT_LP_TOL: f64 = 1e-8;
pub const DEFAULT_LINSYS_TOL: f64 = 1e-8;
pub const DEFAULT_QP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Residuals measured against the original problem.
///
/// `primal` is the worst constraint or bound violation, `dual` the worst
/// stationarity / dual-feasibility violation and `complementarity` the
/// duality gap (LP) or complementary-slackness violation (QP).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Certificate {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl Certificate {
    pub fn max_residual(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSolution {
    pub variables: Vec<f64>,
    pub objective_value: f64,
    pub status: SolverStatus,
    pub certificate: Certificate,
    pub iterations: usize,
}

impl SolverSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}
