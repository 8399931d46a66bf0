//! Linear solves used by the primal step.

pub mod cg;
pub mod dense;
pub mod projection;
pub mod schur;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::GridSpec;

pub use cg::{CgOutcome, CgPlan};
pub use dense::{dense_oracle, OracleKind};
pub use projection::{project_onto_c, ProjectionPlan};
pub use schur::SchurPlan;

/// How the penalised primal step is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenalizedMethod {
    /// Block solve on 1D grids, conjugate gradients otherwise.
    #[default]
    Auto,
    Schur,
    Cg,
}

impl std::str::FromStr for PenalizedMethod {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(PenalizedMethod::Auto),
            "schur" => Ok(PenalizedMethod::Schur),
            "cg" => Ok(PenalizedMethod::Cg),
            other => Err(format!("unknown penalized solver '{other}' (expected auto, schur or cg)")),
        }
    }
}

/// A ready-to-use solver for `(λ AᵀA + I/τ) x = r`.
#[derive(Debug, Clone)]
pub enum PenalizedSolver {
    Schur(SchurPlan),
    Cg(CgPlan),
}

impl PenalizedSolver {
    pub fn new(grid: &GridSpec, lambda: f64, tau: f64, method: PenalizedMethod) -> Result<Self> {
        match method {
            PenalizedMethod::Schur => Ok(PenalizedSolver::Schur(SchurPlan::new(grid, lambda, tau)?)),
            PenalizedMethod::Cg => Ok(PenalizedSolver::Cg(CgPlan::new(grid, lambda, tau)?)),
            PenalizedMethod::Auto if grid.ndim() == 1 => Self::new(grid, lambda, tau, PenalizedMethod::Schur),
            PenalizedMethod::Auto => Self::new(grid, lambda, tau, PenalizedMethod::Cg),
        }
    }

    /// Solves with `(m0, f0)` as the starting point where that matters.
    pub fn solve(&self, r_m: &[f64], r_f: &[f64], m0: &[f64], f0: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        match self {
            PenalizedSolver::Schur(p) => p.solve(r_m, r_f),
            PenalizedSolver::Cg(p) => {
                let out = p.solve(r_m, r_f, m0, f0)?;
                Ok((out.m, out.f))
            }
        }
    }
}
