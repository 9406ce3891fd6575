//! Exact desk-scale solving: LP by revised simplex, MILP by best-bound
//! branch-and-bound, plus MPS import/export for external solvers.

pub mod branch;
pub mod mps;
pub mod simplex;

use crate::milp::MilpModel;
use simplex::{Outcome, Simplex};
use thiserror::Error;

pub use branch::{solve_milp, MilpResult, MilpStatus};
pub use mps::{read_mps, read_solution, write_mps, write_solution};
pub use simplex::FEAS_TOL;

/// Integrality tolerance for accepting a relaxation value as integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("mps parse error at line {line}: {message}")]
    MpsParse { line: usize, message: String },
    #[error("solution file: {0}")]
    SolutionFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpResult {
    pub status: LpStatus,
    /// Meaningful only when optimal.
    pub objective: f64,
    /// Structural variable values; empty unless optimal.
    pub primal: Vec<f64>,
    /// One dual multiplier per constraint row; empty unless optimal.
    pub duals: Vec<f64>,
    /// Reduced costs of the structural variables; empty unless optimal.
    pub reduced_costs: Vec<f64>,
}

/// Solve the LP relaxation (integrality marks ignored).
pub fn solve_lp(model: &MilpModel) -> Result<LpResult, SolverError> {
    let mut s = Simplex::from_model(model);
    let outcome = s.optimize()?;
    Ok(match outcome {
        Outcome::Optimal => LpResult {
            status: LpStatus::Optimal,
            objective: s.objective(),
            primal: s.structural_values(),
            duals: s.duals()?,
            reduced_costs: s.reduced_costs()?,
        },
        Outcome::Infeasible => LpResult {
            status: LpStatus::Infeasible,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
        },
        Outcome::Unbounded => LpResult {
            status: LpStatus::Unbounded,
            objective: f64::NEG_INFINITY,
            primal: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
        },
    })
}

/// Lagrangian dual value of `duals` for a model, using the best bound choice
/// per variable for the reduced-cost term. Weak duality says this never
/// exceeds the optimal objective.
pub fn dual_objective(model: &MilpModel, duals: &[f64]) -> f64 {
    let mut total = 0.0;
    for (c, &y) in model.constraints.iter().zip(duals) {
        total += y * c.rhs;
    }
    // Reduced costs d_j = c_j - y^T A_j, then pick the bound minimizing
    // d_j * x_j.
    let mut d: Vec<f64> = vec![0.0; model.variables.len()];
    for &(j, w) in &model.objective {
        d[j] += w;
    }
    for (c, &y) in model.constraints.iter().zip(duals) {
        for &(j, w) in &c.coeffs {
            d[j] -= y * w;
        }
    }
    for (j, var) in model.variables.iter().enumerate() {
        if d[j] > 0.0 {
            total += d[j] * var.lower;
        } else if d[j] < 0.0 {
            total += d[j] * var.upper;
        }
    }
    total
}
