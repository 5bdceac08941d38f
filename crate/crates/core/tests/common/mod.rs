#![allow(dead_code)]

use aerobat_core::body::{BodyState, V2};
use aerobat_core::linkage::{self, LinkageState, Q1, FDC0, THETA1, THETA9};
use aerobat_core::math::{rot_x, rot_y, rot_z, Mat3};
use aerobat_core::params::LinkageGeometry;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

/// Assembles at an arbitrary crank angle by walking the crank from zero so
/// the nominal assembly mode is kept.
pub fn assemble_at(g: &LinkageGeometry, theta1: f64, fdc: &[f64; 4]) -> Q1 {
    let mut q = linkage::assemble_from_nominal(g, 0.0, fdc).expect("assembles at zero crank");
    let n = (theta1.abs() / 0.05).ceil().max(1.0) as usize;
    for k in 1..=n {
        let t = theta1 * k as f64 / n as f64;
        let mut guess = q;
        guess[THETA9] += t - guess[THETA1];
        q = linkage::assemble(g, t, fdc, &guess).expect("continuation stays assembled");
    }
    q
}

/// A random assembled configuration with consistent velocities.
pub fn feasible_state(g: &LinkageGeometry, r: &mut ChaCha8Rng) -> LinkageState {
    let fdc: [f64; 4] = core::array::from_fn(|i| g.fdc_nominal[i] * uniform(r, 0.85, 1.15));
    let theta1 = uniform(r, 0.0, TAU);
    let q = assemble_at(g, theta1, &fdc);
    let mut qd = Q1::zeros();
    qd[THETA1] = uniform(r, -70.0, 70.0);
    for i in 0..4 {
        qd[FDC0 + i] = uniform(r, -0.02, 0.02);
    }
    let (q, qd) = linkage::project(g, &q, &qd, 1e-13).expect("projection");
    LinkageState { q, qd }
}

pub fn random_rotation(r: &mut ChaCha8Rng) -> Mat3 {
    rot_z(uniform(r, -3.0, 3.0)) * rot_y(uniform(r, -1.4, 1.4)) * rot_x(uniform(r, -3.0, 3.0))
}

/// Random massed state with wing angles near their working range.
pub fn random_body(r: &mut ChaCha8Rng) -> BodyState {
    let joints = [
        uniform(r, -0.8, 0.6),
        uniform(r, -0.9, 0.5),
        uniform(r, -0.8, 0.6),
        uniform(r, -0.9, 0.5),
    ];
    let mut s = BodyState::at_rest(joints, random_rotation(r));
    for i in 4..7 {
        s.q[i] = uniform(r, -1.0, 1.0);
    }
    s.v = V2::from_fn(|_, _| uniform(r, -3.0, 3.0));
    s
}
