pub mod engine;
pub mod error;
pub mod grid;
pub mod io;
pub mod job;
mod nd;
pub mod operators;
pub mod prox;
pub mod solvers;
pub mod transforms;

pub use error::{OtError, Result};
