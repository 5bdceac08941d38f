//! JSON summaries of trajectories and optimization runs.

use aerobat_core::optim::cost::{gait_cost, pitch_term};
use aerobat_core::optim::{CostWeights, OptimizationResult, Termination};
use aerobat_core::sim::metrics::limit_cycle_metric;
use aerobat_core::sim::Trajectory;
use aerobat_core::RobotParams;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostBreakdown {
    /// Seconds covered by the sums.
    pub horizon: f64,
    pub momentum: f64,
    pub velocity: f64,
    pub pitch: f64,
    /// `momentum + velocity`, the open-loop gait objective.
    pub gait: f64,
    /// `gait + pitch`, the closed-loop objective.
    pub total: f64,
}

/// Cost terms over the first `horizon` seconds, each with its configured
/// weight. `None` when the trajectory is too short.
pub fn cost_breakdown(p: &RobotParams, traj: &Trajectory, horizon: f64) -> Option<CostBreakdown> {
    let o = &p.optim;
    let only = |w1, w2| CostWeights { w1, w2, w3: 0.0 };
    let momentum = gait_cost(traj, &only(o.w1, 0.0), horizon).ok()?;
    let velocity = gait_cost(traj, &only(0.0, o.w2), horizon).ok()?;
    let w = CostWeights::from(o);
    let pitch = pitch_term(traj, &w, p.control.pitch_ref, horizon).ok()?;
    let gait = gait_cost(traj, &w, horizon).ok()?;
    Some(CostBreakdown {
        horizon,
        momentum,
        velocity,
        pitch,
        gait,
        total: gait + pitch,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCycleReport {
    pub metric: f64,
    pub state_norm: f64,
    pub relative: f64,
    pub periods_used: usize,
}

pub fn limit_cycle(p: &RobotParams, traj: &Trajectory) -> Option<LimitCycleReport> {
    let lc = limit_cycle_metric(traj, TAU / p.control.omega_ref).ok()?;
    Some(LimitCycleReport {
        metric: lc.metric,
        state_norm: lc.state_norm,
        relative: lc.relative(),
        periods_used: lc.periods_used,
    })
}

/// Length of the run used to judge a gait once the search is done. The
/// search horizon starts from rest and is mostly transient; the steady
/// limit cycle needs a few more seconds to emerge.
pub const GAIT_EVALUATION_SECONDS: f64 = 4.0;

/// Largest `|theta_y - theta_ref|` over samples with `t >= from`.
pub fn max_pitch_error(traj: &Trajectory, pitch_ref: f64, from: f64) -> f64 {
    traj.samples
        .iter()
        .filter(|s| s.t >= from - 1e-9)
        .fold(0.0, |m, s| m.max((s.pitch - pitch_ref).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub duration: f64,
    pub samples: usize,
    pub final_velocity: [f64; 3],
    pub mean_velocity: [f64; 3],
    pub final_pitch: f64,
    pub limit_cycle: Option<LimitCycleReport>,
    pub cost: Option<CostBreakdown>,
    pub max_constraint_norm: f64,
    pub max_orthonormality_error: f64,
    /// Set when the run stopped early; samples up to the failure are kept.
    pub error: Option<String>,
}

pub fn summarize(p: &RobotParams, mode: &str, traj: &Trajectory, error: Option<String>) -> Summary {
    let last = traj.samples.last();
    let v = last.map_or([0.0; 3], |s| [s.velocity.x, s.velocity.y, s.velocity.z]);
    let mean = traj.mean_velocity();
    Summary {
        mode: mode.to_string(),
        duration: traj.duration(),
        samples: traj.samples.len(),
        final_velocity: v,
        mean_velocity: [mean.x, mean.y, mean.z],
        final_pitch: last.map_or(0.0, |s| s.pitch),
        limit_cycle: limit_cycle(p, traj),
        cost: cost_breakdown(p, traj, traj.duration()),
        max_constraint_norm: traj.max_drift(),
        max_orthonormality_error: traj.samples.iter().fold(0.0, |m, s| m.max(s.orthonormality)),
        error,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub x: Vec<f64>,
    pub cost: f64,
    pub feasible: bool,
    pub best_so_far: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimSettingsReport {
    pub max_evals: usize,
    pub initial_step: f64,
    pub tolerance: f64,
    pub restarts: usize,
    pub horizon: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimReport {
    pub problem: String,
    pub names: Vec<String>,
    pub x_best: Vec<f64>,
    pub cost: f64,
    /// Cost of the reference point the search is judged against.
    pub baseline_cost: f64,
    pub baseline_x: Vec<f64>,
    pub evaluations: usize,
    pub termination: String,
    pub seed: u64,
    pub config_hash: String,
    pub settings: OptimSettingsReport,
    pub trace: Vec<TraceEntry>,
}

pub fn trace_entries(r: &OptimizationResult) -> Vec<TraceEntry> {
    r.trace
        .iter()
        .zip(r.best_so_far())
        .map(|(e, b)| TraceEntry {
            x: e.x.clone(),
            cost: e.cost,
            feasible: e.feasible,
            best_so_far: b,
        })
        .collect()
}

pub fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxEvaluations => "max-evaluations",
    }
}
