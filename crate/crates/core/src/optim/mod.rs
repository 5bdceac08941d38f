//! Simulation-in-the-loop optimization: bounded Nelder-Mead, the gait and
//! pitch costs, and the two problems built on them.

pub mod cost;
mod nelder_mead;
pub mod problems;

pub use cost::CostWeights;
pub use nelder_mead::{nelder_mead, Bounds, EvalRecord, NelderMeadSettings, OptimizationResult, Termination};
