//! Periodicity diagnostics on recorded trajectories.

use super::{Sample, Trajectory};
use crate::error::{Error, Result};
use nalgebra::SVector;
#[allow(unused_imports)]
use num_traits::Float;

/// Stroboscopic state: body velocity, wing joint angles and body rate.
pub type StrobeState = SVector<f64, 10>;

pub fn strobe_state(s: &Sample) -> StrobeState {
    let mut z = StrobeState::zeros();
    for k in 0..3 {
        z[k] = s.velocity[k];
        z[7 + k] = s.omega[k];
    }
    for k in 0..4 {
        z[3 + k] = s.joints[k];
    }
    z
}

/// Linear interpolation of the stroboscopic state at time `t`.
fn strobe_at(traj: &Trajectory, t: f64) -> Option<StrobeState> {
    let s = &traj.samples;
    let t0 = s.first()?.t;
    let x = (t - t0) / traj.dt;
    if x < -1e-9 || x > (s.len() - 1) as f64 + 1e-9 {
        return None;
    }
    let i = (x.floor().max(0.0) as usize).min(s.len() - 1);
    let f = x - i as f64;
    if i + 1 >= s.len() || f.abs() < 1e-9 {
        return Some(strobe_state(&s[i]));
    }
    Some(strobe_state(&s[i]) * (1.0 - f) + strobe_state(&s[i + 1]) * f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycle {
    /// Smallest one-period return distance over the final periods.
    pub metric: f64,
    /// Norm of the stroboscopic state where the minimum occurs.
    pub state_norm: f64,
    pub periods_used: usize,
}

impl LimitCycle {
    pub fn relative(&self) -> f64 {
        if self.state_norm > 0.0 {
            self.metric / self.state_norm
        } else {
            self.metric
        }
    }
}

/// Return distance `|z(t) - z(t - T)|` at the last `min(5, n - 1)` period
/// marks counted back from the end, minimized over those marks.
pub fn limit_cycle_metric(traj: &Trajectory, period: f64) -> Result<LimitCycle> {
    let needed = (2.0 * period / traj.dt).ceil() as usize + 1;
    let n = traj.samples.len();
    if n < needed || !(period > 0.0) {
        return Err(Error::TrajectoryTooShort { needed, available: n });
    }
    let end = traj.samples[n - 1].t;
    let periods = ((traj.duration() / period) + 1e-9).floor() as usize;
    let marks = periods.saturating_sub(1).min(5).max(1);
    let mut best: Option<LimitCycle> = None;
    for i in 0..marks {
        let t = end - i as f64 * period;
        let (Some(a), Some(b)) = (strobe_at(traj, t), strobe_at(traj, t - period)) else {
            continue;
        };
        let d = (a - b).norm();
        if best.map_or(true, |x| d < x.metric) {
            best = Some(LimitCycle {
                metric: d,
                state_norm: a.norm(),
                periods_used: marks,
            });
        }
    }
    best.ok_or(Error::TrajectoryTooShort { needed, available: n })
}
