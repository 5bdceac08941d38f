//! Quadratic running costs summed over recorded samples.

use crate::error::{Error, Result};
use crate::params::OptimParams;
use crate::sim::Trajectory;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    /// Angular momentum.
    pub w1: f64,
    /// Body velocity.
    pub w2: f64,
    /// Pitch error.
    pub w3: f64,
}

impl From<&OptimParams> for CostWeights {
    fn from(o: &OptimParams) -> Self {
        Self {
            w1: o.w1,
            w2: o.w2,
            w3: o.w3,
        }
    }
}

/// Number of sample intervals covering `horizon`, checked against the
/// trajectory.
fn steps(traj: &Trajectory, horizon: f64) -> Result<usize> {
    let n = (horizon / traj.dt).round() as usize;
    if n == 0 || traj.samples.len() < n + 1 {
        return Err(Error::IncompleteTrajectory);
    }
    Ok(n)
}

/// `sum_k (w1 |Pi_k|^2 + w2 |xdot_B,k|^2) dt` over samples `1..=N`.
pub fn gait_cost(traj: &Trajectory, w: &CostWeights, horizon: f64) -> Result<f64> {
    let n = steps(traj, horizon)?;
    let mut j = 0.0;
    for s in &traj.samples[1..=n] {
        j += (w.w1 * s.momentum.norm_squared() + w.w2 * s.velocity.norm_squared()) * traj.dt;
    }
    Ok(j)
}

/// Pitch-tracking term `w3 sum_k (theta_ref - theta_y,k)^2 dt` alone.
pub fn pitch_term(traj: &Trajectory, w: &CostWeights, pitch_ref: f64, horizon: f64) -> Result<f64> {
    let n = steps(traj, horizon)?;
    let mut j = 0.0;
    for s in &traj.samples[1..=n] {
        let e = pitch_ref - s.pitch;
        j += w.w3 * e * e * traj.dt;
    }
    Ok(j)
}

pub fn pitch_cost(traj: &Trajectory, w: &CostWeights, pitch_ref: f64, horizon: f64) -> Result<f64> {
    Ok(gait_cost(traj, w, horizon)? + pitch_term(traj, w, pitch_ref, horizon)?)
}
