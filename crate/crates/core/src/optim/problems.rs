//! Gait search over `(l_ref, theta_y)` and pitch-gain search over `K_c`.

use super::cost::{gait_cost, pitch_cost, CostWeights};
use super::nelder_mead::{nelder_mead, Bounds, NelderMeadSettings, OptimizationResult};
use crate::error::Result;
use crate::params::RobotParams;
use crate::sim::{simulate, Mode, Trajectory};
use alloc::vec::Vec;

pub fn settings_from(p: &RobotParams) -> NelderMeadSettings {
    let o = &p.optim;
    NelderMeadSettings {
        max_evals: o.max_evals,
        initial_step: o.initial_step,
        tolerance: o.tolerance,
        restarts: o.restarts,
        seed: o.seed,
    }
}

/// Decision vector `[l_ref (4), theta_y]`.
pub fn gait_bounds(p: &RobotParams) -> Result<Bounds> {
    let (lo, hi) = p.fdc_bounds();
    let (plo, phi) = p.optim.pitch_bounds;
    let mut l: Vec<f64> = lo.to_vec();
    let mut u: Vec<f64> = hi.to_vec();
    l.push(plo);
    u.push(phi);
    Bounds::new(l, u)
}

pub fn gait_params(p: &RobotParams, x: &[f64]) -> RobotParams {
    let mut q = p.clone();
    q.control.l_ref_zp = [x[0], x[1], x[2], x[3]];
    q
}

pub fn gait_trajectory(p: &RobotParams, x: &[f64], t_end: f64) -> Result<Trajectory> {
    simulate(&gait_params(p, x), Mode::OpenLoop, x[4], t_end)
}

/// Open-loop gait cost of one candidate over the gait horizon.
pub fn evaluate_gait(p: &RobotParams, x: &[f64]) -> Result<f64> {
    let h = p.optim.gait_horizon;
    gait_cost(&gait_trajectory(p, x, h)?, &CostWeights::from(&p.optim), h)
}

/// Nominal starting point `[l0, initial pitch]`.
pub fn gait_start(p: &RobotParams) -> Vec<f64> {
    let mut x = p.linkage.fdc_nominal.to_vec();
    x.push(p.optim.initial_pitch);
    x
}

pub fn optimize_gait(p: &RobotParams) -> Result<OptimizationResult> {
    let b = gait_bounds(p)?;
    nelder_mead(|x| evaluate_gait(p, x), &gait_start(p), &b, &settings_from(p))
}

pub fn pitch_bounds(p: &RobotParams) -> Result<Bounds> {
    let (lo, hi) = p.optim.kc_bounds;
    Bounds::new([lo; 4].to_vec(), [hi; 4].to_vec())
}

pub fn pitch_params(p: &RobotParams, kc: &[f64]) -> RobotParams {
    let mut q = p.clone();
    q.control.kc = [kc[0], kc[1], kc[2], kc[3]];
    q
}

/// Closed-loop run from rest at `initial_pitch` with gains `kc`, using
/// `p.control.l_ref_zp` as the operating point.
pub fn pitch_trajectory(p: &RobotParams, kc: &[f64], initial_pitch: f64, t_end: f64) -> Result<Trajectory> {
    simulate(&pitch_params(p, kc), Mode::PitchStabilized, initial_pitch, t_end)
}

pub fn evaluate_pitch(p: &RobotParams, kc: &[f64], initial_pitch: f64) -> Result<f64> {
    let h = p.optim.pitch_horizon;
    let traj = pitch_trajectory(p, kc, initial_pitch, h)?;
    pitch_cost(&traj, &CostWeights::from(&p.optim), p.control.pitch_ref, h)
}

/// Gain search from `K_c = 0` around the operating point already stored in
/// `p.control.l_ref_zp`.
pub fn optimize_pitch_gains(p: &RobotParams, initial_pitch: f64) -> Result<OptimizationResult> {
    let b = pitch_bounds(p)?;
    nelder_mead(|k| evaluate_pitch(p, k, initial_pitch), &[0.0; 4], &b, &settings_from(p))
}
