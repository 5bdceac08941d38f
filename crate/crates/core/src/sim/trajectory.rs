use super::SystemState;
use crate::math::{Mat3, Vec3};
use alloc::vec::Vec;

/// One recorded instant. Positions and velocities are inertial, `omega` is
/// the body angular velocity in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub rotation: Mat3,
    pub omega: Vec3,
    /// `[thS_L, thE_L, thS_R, thE_R]`.
    pub joints: [f64; 4],
    pub joint_rates: [f64; 4],
    pub theta1: f64,
    pub theta1_dot: f64,
    pub fdc: [f64; 4],
    pub l_ref: [f64; 4],
    pub momentum: Vec3,
    pub pitch: f64,
    pub lift: f64,
    pub thrust: f64,
    /// Infinity norm of the loop-closure residual.
    pub drift: f64,
    pub phase_error: f64,
    pub orthonormality: f64,
    pub determinant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Spacing of the recorded samples.
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub final_state: SystemState,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn max_drift(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.drift))
    }

    pub fn mean_velocity(&self) -> Vec3 {
        if self.samples.is_empty() {
            return Vec3::zeros();
        }
        self.samples.iter().fold(Vec3::zeros(), |a, s| a + s.velocity) / self.samples.len() as f64
    }
}
