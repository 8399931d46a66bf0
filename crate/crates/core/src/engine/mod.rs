//! The primal-dual transport solver.

mod config;
mod pdhg;
mod tv;

pub use config::{Model, SolverConfig, TvKind, DEFAULT_ITERATIONS, DEFAULT_SIGMA, DEFAULT_TIME_STEPS};
pub use pdhg::{
    energy, residual, run, run_constrained, run_penalized, run_with_tv, DualState, ProgressRow, Solution, Solver,
};
pub use tv::frame_tv;
