//! Massless linkage network: loop-closure constraints, their derivatives,
//! assembly, acceleration-level dynamics and drift projection.
//!
//! Every loop is written as a sum of chain terms `s (L + l_fdc) u(theta)`
//! plus a constant anchor offset, which keeps residual, Jacobian and bias
//! evaluation in one place.

use crate::error::{Error, Result};
use crate::math::{rot2, unit, unit_perp, Vec2};
use crate::params::LinkageGeometry;
use alloc::vec::Vec;
use core::f64::consts::TAU;
use nalgebra::{SMatrix, SVector};

pub type Q1 = SVector<f64, 12>;
pub type Residual = SVector<f64, 7>;
pub type ConstraintJacobian = SMatrix<f64, 7, 12>;
type Square7 = SMatrix<f64, 7, 7>;

pub const THETA1: usize = 0;
pub const THETA2: usize = 1;
pub const THETA4: usize = 2;
pub const THETA9: usize = 3;
pub const THETA10: usize = 4;
pub const THETA12: usize = 5;
pub const THETA13: usize = 6;
pub const THETA14: usize = 7;
/// First FDC slot; `l3b, l3c, l8b, l10b` follow in order.
pub const FDC0: usize = 8;

/// Coordinates solved for by assembly and projection.
pub const FREE: [usize; 7] = [THETA2, THETA4, THETA9, THETA10, THETA12, THETA13, THETA14];
/// Coordinates prescribed by the crank and the FDC actuators.
pub const DRIVEN: [usize; 5] = [THETA1, FDC0, FDC0 + 1, FDC0 + 2, FDC0 + 3];

pub const ASSEMBLY_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 50;
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkageState {
    pub q: Q1,
    pub qd: Q1,
}

/// Crank acceleration followed by the four FDC length accelerations.
pub type LinkageInput = [f64; 5];

#[derive(Clone, Copy)]
struct Term {
    sign: f64,
    len: f64,
    fdc: Option<usize>,
    angle: usize,
}

impl Term {
    #[inline]
    fn length(&self, q: &Q1) -> f64 {
        self.len + self.fdc.map_or(0.0, |i| q[i])
    }

    #[inline]
    fn rate(&self, qd: &Q1) -> f64 {
        self.fdc.map_or(0.0, |i| qd[i])
    }
}

struct Loop {
    offset: Vec2,
    terms: [Term; 3],
}

fn term(sign: f64, len: f64, fdc: Option<usize>, angle: usize) -> Term {
    Term {
        sign,
        len,
        fdc,
        angle,
    }
}

fn loops(g: &LinkageGeometry) -> [Loop; 3] {
    [
        // joint 3: p1 + l1 u1 + l2 u2 = p4 - (l3a + l3b) u4
        Loop {
            offset: g.anchor_1 - g.anchor_4,
            terms: [
                term(1.0, g.l1, None, THETA1),
                term(1.0, g.l2, None, THETA2),
                term(1.0, g.l3a, Some(FDC0), THETA4),
            ],
        },
        // joint 11: p9 + l9 u9 + (l10a + l10b) u10 = p12 + l12a u12
        Loop {
            offset: g.anchor_9 - g.anchor_12,
            terms: [
                term(1.0, g.l9, None, THETA9),
                term(1.0, g.l10a, Some(FDC0 + 3), THETA10),
                term(-1.0, g.l12a, None, THETA12),
            ],
        },
        // joint 15: p4 + l3c u4 + (l8a + l8b) u13 = p14 + l14 u14
        Loop {
            offset: g.anchor_4 - g.anchor_14,
            terms: [
                term(1.0, 0.0, Some(FDC0 + 1), THETA4),
                term(1.0, g.l8a, Some(FDC0 + 2), THETA13),
                term(-1.0, g.l14, None, THETA14),
            ],
        },
    ]
}

/// Loop-closure residual `[p3A - p3B; p11A - p11B; p15A - p15B; theta1 - theta9 - phase]`.
pub fn constraint_residual(g: &LinkageGeometry, q: &Q1) -> Residual {
    let mut c = Residual::zeros();
    for (k, lp) in loops(g).iter().enumerate() {
        let mut r = lp.offset;
        for t in &lp.terms {
            r += t.sign * t.length(q) * unit(q[t.angle]);
        }
        c[2 * k] = r.x;
        c[2 * k + 1] = r.y;
    }
    c[6] = q[THETA1] - q[THETA9] - g.phase;
    c
}

/// `M_A = dC/dq`.
pub fn constraint_jacobian(g: &LinkageGeometry, q: &Q1) -> ConstraintJacobian {
    let mut m = ConstraintJacobian::zeros();
    for (k, lp) in loops(g).iter().enumerate() {
        for t in &lp.terms {
            let th = q[t.angle];
            let da = t.sign * t.length(q) * unit_perp(th);
            m[(2 * k, t.angle)] += da.x;
            m[(2 * k + 1, t.angle)] += da.y;
            if let Some(i) = t.fdc {
                let dl = t.sign * unit(th);
                m[(2 * k, i)] += dl.x;
                m[(2 * k + 1, i)] += dl.y;
            }
        }
    }
    m[(6, THETA1)] = 1.0;
    m[(6, THETA9)] = -1.0;
    m
}

/// Velocity-product term `h_A` with `C'' = M_A q'' + h_A`.
pub fn constraint_bias(g: &LinkageGeometry, q: &Q1, qd: &Q1) -> Residual {
    let mut h = Residual::zeros();
    for (k, lp) in loops(g).iter().enumerate() {
        let mut r = Vec2::zeros();
        for t in &lp.terms {
            let th = q[t.angle];
            let w = qd[t.angle];
            let l = t.length(q);
            let ld = t.rate(qd);
            r += t.sign * (2.0 * ld * w * unit_perp(th) - l * w * w * unit(th));
        }
        h[2 * k] = r.x;
        h[2 * k + 1] = r.y;
    }
    h
}

fn split(m: &ConstraintJacobian) -> (Square7, SMatrix<f64, 7, 5>) {
    let mut a = Square7::zeros();
    let mut b = SMatrix::<f64, 7, 5>::zeros();
    for r in 0..7 {
        for (c, &i) in FREE.iter().enumerate() {
            a[(r, c)] = m[(r, i)];
        }
        for (c, &i) in DRIVEN.iter().enumerate() {
            b[(r, c)] = m[(r, i)];
        }
    }
    (a, b)
}

fn solve7(a: Square7, rhs: &Residual, what: &'static str) -> Result<Residual> {
    let lu = a.lu();
    lu.solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::Singular(what))
}

fn inf_norm(c: &Residual) -> f64 {
    c.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Newton iteration on the free coordinates with the driven ones frozen.
fn newton(g: &LinkageGeometry, mut q: Q1, tol: f64) -> Result<Q1> {
    let mut c = constraint_residual(g, &q);
    let mut res = inf_norm(&c);
    for _ in 0..MAX_NEWTON {
        if res <= tol {
            return Ok(q);
        }
        let (a, _) = split(&constraint_jacobian(g, &q));
        let mut dx = solve7(a, &(-c), "linkage assembly")?;
        let big = dx.amax();
        if big > MAX_STEP {
            dx *= MAX_STEP / big;
        }
        for (k, &i) in FREE.iter().enumerate() {
            q[i] += dx[k];
        }
        c = constraint_residual(g, &q);
        res = inf_norm(&c);
        if !res.is_finite() {
            break;
        }
    }
    if res <= tol {
        Ok(q)
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_NEWTON,
            residual: res,
        })
    }
}

/// Guess built from the configured assembly-mode seed with the driven
/// coordinates set to their targets.
pub fn initial_guess(g: &LinkageGeometry, theta1: f64, fdc: &[f64; 4]) -> Q1 {
    let mut q = Q1::zeros();
    for (k, &i) in FREE.iter().enumerate() {
        q[i] = g.assembly_guess[k];
    }
    q[THETA1] = theta1;
    q[THETA9] = theta1 - g.phase;
    for i in 0..4 {
        q[FDC0 + i] = fdc[i];
    }
    q
}

/// Solves the loop closures for the free coordinates with `theta1` and the
/// FDC lengths held at their targets. Newton converges to the assembly mode
/// whose basin contains `guess`.
pub fn assemble(g: &LinkageGeometry, theta1: f64, fdc: &[f64; 4], guess: &Q1) -> Result<Q1> {
    let mut q = *guess;
    q[THETA1] = theta1;
    for i in 0..4 {
        q[FDC0 + i] = fdc[i];
    }
    newton(g, q, ASSEMBLY_TOL)
}

/// Restores the position and velocity constraints without touching the
/// driven coordinates.
pub fn project(g: &LinkageGeometry, q: &Q1, qd: &Q1, tol: f64) -> Result<(Q1, Q1)> {
    let q = newton(g, *q, tol)?;
    let (a, b) = split(&constraint_jacobian(g, &q));
    let driven = SVector::<f64, 5>::from_fn(|k, _| qd[DRIVEN[k]]);
    let free = solve7(a, &(-(b * driven)), "velocity projection")?;
    let mut qd = *qd;
    for (k, &i) in FREE.iter().enumerate() {
        qd[i] = free[k];
    }
    Ok((q, qd))
}

/// Acceleration-level equation of motion. The driven rows of the square
/// system select the inputs directly, so only the 7x7 block for the free
/// coordinates needs a factorization.
pub fn massless_accel(g: &LinkageGeometry, q: &Q1, qd: &Q1, u: &LinkageInput) -> Result<Q1> {
    let (a, b) = split(&constraint_jacobian(g, q));
    let h = constraint_bias(g, q, qd);
    let uv = SVector::<f64, 5>::from_column_slice(u);
    let free = solve7(a, &(-(h + b * uv)), "massless dynamics")?;
    let mut qdd = Q1::zeros();
    for (k, &i) in FREE.iter().enumerate() {
        qdd[i] = free[k];
    }
    for (k, &i) in DRIVEN.iter().enumerate() {
        qdd[i] = u[k];
    }
    Ok(qdd)
}

/// Planar joint positions. Joints closing a loop are reported from both
/// sides; they only agree on an assembled configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkagePose {
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3a: Vec2,
    pub p3b: Vec2,
    pub p4: Vec2,
    pub p5: Vec2,
    pub p9: Vec2,
    pub p10: Vec2,
    pub p11a: Vec2,
    pub p11b: Vec2,
    pub p12: Vec2,
    pub p13: Vec2,
    pub p14: Vec2,
    pub p15a: Vec2,
    pub p15b: Vec2,
    pub p16: Vec2,
    /// Rocker angles carrying the shoulder and elbow guides.
    pub shoulder_angle: f64,
    pub elbow_angle: f64,
}

pub fn forward_kinematics(g: &LinkageGeometry, q: &Q1) -> LinkagePose {
    let l3 = g.l3a + q[FDC0];
    let l8 = g.l8a + q[FDC0 + 2];
    let l10 = g.l10a + q[FDC0 + 3];
    let p2 = g.anchor_1 + g.l1 * unit(q[THETA1]);
    let p10 = g.anchor_9 + g.l9 * unit(q[THETA9]);
    let p13 = g.anchor_4 + q[FDC0 + 1] * unit(q[THETA4]);
    LinkagePose {
        p1: g.anchor_1,
        p2,
        p3a: p2 + g.l2 * unit(q[THETA2]),
        p3b: g.anchor_4 - l3 * unit(q[THETA4]),
        p4: g.anchor_4,
        p5: g.anchor_14 + rot2(q[THETA14]) * g.shoulder_guide,
        p9: g.anchor_9,
        p10,
        p11a: p10 + l10 * unit(q[THETA10]),
        p11b: g.anchor_12 + g.l12a * unit(q[THETA12]),
        p12: g.anchor_12,
        p13,
        p14: g.anchor_14,
        p15a: p13 + l8 * unit(q[THETA13]),
        p15b: g.anchor_14 + g.l14 * unit(q[THETA14]),
        p16: g.anchor_12 + rot2(q[THETA12]) * g.elbow_guide,
        shoulder_angle: q[THETA14],
        elbow_angle: q[THETA12],
    }
}

/// Positions and velocities of the two guide end effectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidePoints {
    pub p5: Vec2,
    pub v5: Vec2,
    pub p16: Vec2,
    pub v16: Vec2,
}

#[inline]
fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

pub fn guide_points(g: &LinkageGeometry, q: &Q1, qd: &Q1) -> GuidePoints {
    let r5 = rot2(q[THETA14]) * g.shoulder_guide;
    let r16 = rot2(q[THETA12]) * g.elbow_guide;
    GuidePoints {
        p5: g.anchor_14 + r5,
        v5: qd[THETA14] * perp(r5),
        p16: g.anchor_12 + r16,
        v16: qd[THETA12] * perp(r16),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub theta1: f64,
    pub p5: Vec2,
    pub p16: Vec2,
    pub shoulder_angle: f64,
    pub elbow_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPath {
    pub fdc: [f64; 4],
    /// Samples at `theta1 = 2 pi k / n`, or the assembly failure.
    pub samples: Result<Vec<SweepSample>>,
    /// Distance between the start configuration and the one reached after a
    /// full crank turn by continuation. Zero for a closed path.
    pub closure_gap: f64,
}

const HOMOTOPY_STEPS: usize = 8;

/// Assembles at `theta1` for an arbitrary FDC vector by walking the lengths
/// from nominal, so the nominal assembly mode is kept.
pub fn assemble_from_nominal(g: &LinkageGeometry, theta1: f64, fdc: &[f64; 4]) -> Result<Q1> {
    let l0 = g.fdc_nominal;
    let mut q = assemble(g, theta1, &l0, &initial_guess(g, theta1, &l0))?;
    if *fdc == l0 {
        return Ok(q);
    }
    for s in 1..=HOMOTOPY_STEPS {
        let a = s as f64 / HOMOTOPY_STEPS as f64;
        let l: [f64; 4] = core::array::from_fn(|i| l0[i] + a * (fdc[i] - l0[i]));
        q = assemble(g, theta1, &l, &q)?;
    }
    Ok(q)
}

fn trace(g: &LinkageGeometry, fdc: &[f64; 4], n: usize) -> Result<(Vec<SweepSample>, f64)> {
    let start = assemble_from_nominal(g, 0.0, fdc)?;
    let mut q = start;
    let mut out = Vec::with_capacity(n);
    // Sub-steps keep continuation inside the Newton basin for coarse sampling.
    let sub = (360 / n.max(1)).max(1);
    for k in 0..=n {
        let th = TAU * k as f64 / n as f64;
        if k > 0 {
            let prev = TAU * (k - 1) as f64 / n as f64;
            for j in 1..=sub {
                let t = prev + (th - prev) * j as f64 / sub as f64;
                let mut guess = q;
                guess[THETA9] += t - guess[THETA1];
                q = assemble(g, t, fdc, &guess)?;
            }
        }
        if k == n {
            break;
        }
        let pose = forward_kinematics(g, &q);
        out.push(SweepSample {
            theta1: th,
            p5: pose.p5,
            p16: pose.p16,
            shoulder_angle: pose.shoulder_angle,
            elbow_angle: pose.elbow_angle,
        });
    }
    // Angles may have wrapped by whole turns; compare on the circle.
    let gap = FREE
        .iter()
        .map(|&i| {
            let d = num_traits::Euclid::rem_euclid(&(q[i] - start[i]), &TAU);
            d.min(TAU - d)
        })
        .fold(0.0, f64::max);
    Ok((out, gap))
}

/// Traces both guide end-effector paths over one crank revolution for each
/// FDC vector of the grid. Failures are recorded per grid point.
pub fn sensitivity_sweep(g: &LinkageGeometry, grid: &[[f64; 4]], n_crank: usize) -> Vec<SweepPath> {
    grid.iter()
        .map(|fdc| match trace(g, fdc, n_crank) {
            Ok((samples, gap)) => SweepPath {
                fdc: *fdc,
                samples: Ok(samples),
                closure_gap: gap,
            },
            Err(e) => SweepPath {
                fdc: *fdc,
                samples: Err(e),
                closure_gap: f64::INFINITY,
            },
        })
        .collect()
}
