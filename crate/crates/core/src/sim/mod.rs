//! Closed-loop simulation of the full model.
//!
//! The massless linkage and the massed system are integrated together with
//! classic RK4. Controllers are evaluated at every stage. After each step the
//! linkage is projected back onto its constraint manifold and the body
//! rotation is re-orthonormalized.

pub mod control;
pub mod metrics;
mod trajectory;

pub use trajectory::{Sample, Trajectory};

use crate::aero;
use crate::body::{self, BodyState, V2};
use crate::coupling;
use crate::error::{Error, Result};
use crate::linkage::{self, LinkageState, Q1, FDC0, THETA1, THETA9};
use crate::math::{orthonormality_error, pitch_of, polar_orthonormalize, rot_y, Mat3, Vec3};
use crate::params::{Orthonormalization, RobotParams};
use alloc::vec::Vec;
use nalgebra::SVector;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Constant FDC reference `l_ref_zp`.
    OpenLoop,
    /// FDC reference from the pitch outer loop.
    PitchStabilized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub linkage: LinkageState,
    pub body: BodyState,
}

type Packed = SVector<f64, 50>;

fn pack(s: &SystemState) -> Packed {
    let mut x = Packed::zeros();
    x.rows_mut(0, 12).copy_from(&s.linkage.q);
    x.rows_mut(12, 12).copy_from(&s.linkage.qd);
    x.rows_mut(24, 7).copy_from(&s.body.q);
    x.rows_mut(31, 10).copy_from(&s.body.v);
    x.rows_mut(41, 9).copy_from_slice(s.body.r.as_slice());
    x
}

fn unpack(x: &Packed, t: f64) -> SystemState {
    SystemState {
        t,
        linkage: LinkageState {
            q: x.fixed_rows::<12>(0).into_owned(),
            qd: x.fixed_rows::<12>(12).into_owned(),
        },
        body: BodyState {
            q: x.fixed_rows::<7>(24).into_owned(),
            v: x.fixed_rows::<10>(31).into_owned(),
            r: Mat3::from_column_slice(x.fixed_rows::<9>(41).as_slice()),
        },
    }
}

/// Time derivative of the packed state.
fn rates(s: &SystemState, e: &Evaluation) -> Packed {
    let mut d = Packed::zeros();
    d.rows_mut(0, 12).copy_from(&s.linkage.qd);
    d.rows_mut(12, 12).copy_from(&e.q1dd);
    d.rows_mut(24, 4).copy_from(&s.body.v.rows(0, 4));
    d.rows_mut(28, 3).copy_from(&s.body.v.rows(body::TRANS, 3));
    d.rows_mut(31, 10).copy_from(&e.vdot);
    d.rows_mut(41, 9).copy_from_slice(e.rdot.as_slice());
    d
}

/// Everything acting on the system at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub l_ref: [f64; 4],
    pub input: linkage::LinkageInput,
    pub q1dd: Q1,
    pub joint_force: V2,
    pub guide_force: V2,
    pub aero: aero::AeroForce,
    pub vdot: V2,
    pub rdot: Mat3,
}

pub fn fdc_lengths(q: &Q1) -> [f64; 4] {
    core::array::from_fn(|i| q[FDC0 + i])
}

pub struct Simulator<'a> {
    pub params: &'a RobotParams,
    pub mode: Mode,
    bounds: ([f64; 4], [f64; 4]),
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a RobotParams, mode: Mode) -> Self {
        Self {
            params,
            mode,
            bounds: params.fdc_bounds(),
        }
    }

    pub fn l_ref(&self, s: &SystemState) -> [f64; 4] {
        let c = &self.params.control;
        match self.mode {
            Mode::OpenLoop => control::saturate(&c.l_ref_zp, &self.bounds.0, &self.bounds.1),
            Mode::PitchStabilized => control::pitch_outer_loop(pitch_of(&s.body.r), c, &self.bounds),
        }
    }

    /// Evaluates controllers, forces and accelerations at `s`.
    pub fn evaluate(&self, s: &SystemState) -> Result<Evaluation> {
        let p = self.params;
        let c = &p.control;
        let l_ref = self.l_ref(s);
        let q1 = &s.linkage.q;
        let qd1 = &s.linkage.qd;
        let l = fdc_lengths(q1);
        let ld = fdc_lengths(qd1);
        let up = control::fdc_controller(&l, &ld, &l_ref, &c.kp2, &c.kd2);
        let input = [
            control::crank_controller(qd1[THETA1], c.omega_ref, c.kd1),
            up[0],
            up[1],
            up[2],
            up[3],
        ];
        let q1dd = linkage::massless_accel(&p.linkage, q1, qd1, &input).map_err(|e| e.at(s.t, "linkage"))?;
        let joint_force = coupling::torsional_forces(&p.massed, &s.body);
        let gp = linkage::guide_points(&p.linkage, q1, qd1);
        let guides = coupling::guide_forces(&p.massed, &gp, &s.body).map_err(|e| e.at(s.t, "coupling"))?;
        let guide_force = coupling::assemble_guide_wrench(&s.body, &guides);
        let aero = if p.aero.enabled {
            aero::generalized_aero_force(&p.massed, &p.aero, &s.body)
        } else {
            aero::AeroForce {
                generalized: V2::zeros(),
                total: Vec3::zeros(),
            }
        };
        let total = joint_force + guide_force + aero.generalized;
        let (vdot, rdot) = body::massed_accel(&p.massed, &s.body, &total).map_err(|e| e.at(s.t, "body"))?;
        Ok(Evaluation {
            l_ref,
            input,
            q1dd,
            joint_force,
            guide_force,
            aero,
            vdot,
            rdot,
        })
    }

    fn derivative(&self, x: &Packed, t: f64) -> Result<Packed> {
        let s = unpack(x, t);
        let e = self.evaluate(&s)?;
        Ok(rates(&s, &e))
    }

    /// One RK4 step followed by linkage projection and rotation repair.
    pub fn step(&self, s: &SystemState, dt: f64) -> Result<SystemState> {
        let e = self.evaluate(s)?;
        self.step_from(s, &e, dt)
    }

    /// As [`Simulator::step`], reusing an evaluation of `s` for the first stage.
    fn step_from(&self, s: &SystemState, e: &Evaluation, dt: f64) -> Result<SystemState> {
        let t = s.t;
        let x = pack(s);
        let k1 = rates(s, e);
        let k2 = self.derivative(&(x + k1 * (0.5 * dt)), t + 0.5 * dt)?;
        let k3 = self.derivative(&(x + k2 * (0.5 * dt)), t + 0.5 * dt)?;
        let k4 = self.derivative(&(x + k3 * dt), t + dt)?;
        let xn = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        let mut n = unpack(&xn, t + dt);
        let (q, qd) = linkage::project(&self.params.linkage, &n.linkage.q, &n.linkage.qd, self.params.sim.projection_tol)
            .map_err(|e| e.at(n.t, "linkage"))?;
        n.linkage = LinkageState { q, qd };
        if self.params.sim.orthonormalization == Orthonormalization::EveryStep {
            n.body.r = polar_orthonormalize(&n.body.r).ok_or(Error::IllConditioned.at(n.t, "body"))?;
        }
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::IllConditioned.at(n.t, "body"));
        }
        Ok(n)
    }

    pub fn sample(&self, s: &SystemState) -> Result<Sample> {
        Ok(self.sample_from(s, &self.evaluate(s)?))
    }

    fn sample_from(&self, s: &SystemState, e: &Evaluation) -> Sample {
        let p = self.params;
        let c = linkage::constraint_residual(&p.linkage, &s.linkage.q);
        let b = &s.body;
        Sample {
            t: s.t,
            position: b.position(),
            velocity: b.velocity(),
            rotation: b.r,
            omega: b.omega(),
            joints: core::array::from_fn(|i| b.q[i]),
            joint_rates: core::array::from_fn(|i| b.v[i]),
            theta1: s.linkage.q[THETA1],
            theta1_dot: s.linkage.qd[THETA1],
            fdc: fdc_lengths(&s.linkage.q),
            l_ref: e.l_ref,
            momentum: body::angular_momentum(&p.massed, b, p.sim.momentum_sign),
            pitch: pitch_of(&b.r),
            lift: e.aero.lift(),
            thrust: e.aero.thrust(),
            drift: c.amax(),
            phase_error: (s.linkage.q[THETA1] - s.linkage.q[THETA9] - p.linkage.phase).abs(),
            orthonormality: orthonormality_error(&b.r),
            determinant: b.r.determinant(),
        }
    }

    /// Integrates from `initial` to `t_end`. On failure the samples recorded so
    /// far are returned alongside the error.
    pub fn run(&self, initial: SystemState, t_end: f64) -> (Trajectory, Option<Error>) {
        let dt = self.params.sim.dt;
        let dec = self.params.sim.decimation;
        let steps = ((t_end - initial.t) / dt).round() as usize;
        let mut samples = Vec::with_capacity(steps / dec + 1);
        let mut s = initial;
        let t0 = initial.t;
        let mut err = None;
        let mut k = 0;
        loop {
            let e = match self.evaluate(&s) {
                Ok(e) => e,
                Err(e) => {
                    err = Some(e);
                    break;
                }
            };
            if k % dec == 0 {
                samples.push(self.sample_from(&s, &e));
            }
            if k == steps {
                break;
            }
            k += 1;
            match self.step_from(&s, &e, dt) {
                Ok(mut n) => {
                    // Fixed grid: avoid accumulating rounding in t.
                    n.t = t0 + k as f64 * dt;
                    s = n;
                }
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        (
            Trajectory {
                dt: dt * dec as f64,
                samples,
                final_state: s,
            },
            err,
        )
    }
}

/// Initial state: crank at `theta1 = 0` spinning at `omega_ref`, FDCs at
/// rest at the initial reference, body at rest with pitch `pitch` and wings
/// aligned with their guides.
pub fn initial_state(p: &RobotParams, mode: Mode, pitch: f64) -> Result<SystemState> {
    let r = rot_y(pitch);
    let probe = SystemState {
        t: 0.0,
        linkage: LinkageState {
            q: Q1::zeros(),
            qd: Q1::zeros(),
        },
        body: BodyState::at_rest([0.0; 4], r),
    };
    let l0 = Simulator::new(p, mode).l_ref(&probe);
    let q = linkage::assemble_from_nominal(&p.linkage, 0.0, &l0)?;
    let mut qd = Q1::zeros();
    qd[THETA1] = p.control.omega_ref;
    let (q, qd) = linkage::project(&p.linkage, &q, &qd, p.sim.projection_tol)?;
    let gp = linkage::guide_points(&p.linkage, &q, &Q1::zeros());
    let [ts, te] = coupling::guide_aligned_angles(&p.massed, &gp, p.massed.joint_rest)?;
    Ok(SystemState {
        t: 0.0,
        linkage: LinkageState { q, qd },
        body: BodyState::at_rest([ts, te, ts, te], r),
    })
}

/// Convenience wrapper: build the initial state and run for `t_end`.
pub fn simulate(p: &RobotParams, mode: Mode, pitch: f64, t_end: f64) -> Result<Trajectory> {
    let s0 = initial_state(p, mode, pitch)?;
    match Simulator::new(p, mode).run(s0, t_end) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}

/// Energy stored in the torsional joints and guide springs.
pub fn spring_energy(p: &RobotParams, s: &SystemState) -> Result<f64> {
    let m = &p.massed;
    let mut e = 0.0;
    for i in 0..4 {
        let j = i % 2;
        let d = s.body.q[i] - m.joint_rest[j];
        e += 0.5 * m.joint_stiffness[j] * d * d;
    }
    let gp = linkage::guide_points(&p.linkage, &s.linkage.q, &s.linkage.qd);
    for (i, g) in coupling::guide_forces(m, &gp, &s.body)?.iter().enumerate() {
        let d = (g.target - g.driver.p).norm() - m.guide_rest[i % 2];
        e += 0.5 * m.guide_stiffness * d * d;
    }
    Ok(e)
}

/// Kinetic plus gravitational plus spring energy of the massed system.
pub fn total_energy(p: &RobotParams, s: &SystemState) -> Result<f64> {
    let (t, u) = body::energies(&p.massed, &s.body);
    Ok(t + u + spring_energy(p, s)?)
}
