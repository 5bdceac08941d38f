//! Quasi-steady strip theory.
//!
//! Every wing link is cut into spanwise strips whose aerodynamic center sits
//! a quarter chord behind the leading edge. The radius is also cut into
//! chordwise strips with the wingtip as leading edge, centered a quarter span
//! in from the tip. All strip axes are fixed to their link: `e_D` is the body
//! x axis (towards the leading edge) and `e_L = e_D x e_span` is the strip
//! normal, mirrored for the right wing.

use crate::body::{self, BodyState, Segment, Wing, ROT, TRANS, V2};
use crate::math::{mirror, rot_x, Vec3};
use crate::params::{AeroParams, MassedParams};
#[allow(unused_imports)]
use num_traits::Float;

const DEG: f64 = core::f64::consts::PI / 180.0;
const MIN_SPEED_SQ: f64 = 1e-24;

/// Lift and drag coefficients for an angle of attack in degrees.
pub fn lift_drag_coeffs(beta_deg: f64) -> (f64, f64) {
    let cl = 0.225 + 1.58 * ((2.13 * beta_deg - 7.2) * DEG).sin();
    let cd = 1.92 - 1.55 * ((2.04 * beta_deg - 9.82) * DEG).cos();
    (cl, cd)
}

/// Angle of attack in degrees and squared in-plane relative speed for a
/// relative wind `v_w` and strip axes, all in one frame.
pub fn angle_of_attack(v_w: &Vec3, e_l: &Vec3, e_d: &Vec3) -> (f64, f64) {
    let a = v_w.dot(e_l);
    let b = v_w.dot(e_d);
    if a.abs() < 1e-12 && b.abs() < 1e-12 {
        return (0.0, 0.0);
    }
    (-a.atan2(b) / DEG, a * a + b * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripKind {
    Spanwise,
    Chordwise,
}

/// Per-strip diagnostic record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripRecord {
    pub wing: Wing,
    pub segment: Segment,
    pub kind: StripKind,
    /// Midpoint parameter in `[0, 1]`.
    pub x_hat: f64,
    pub area: f64,
    /// Body-frame application point.
    pub point: Vec3,
    pub beta_deg: f64,
    pub v_r: f64,
    /// Body-frame lift and drag.
    pub lift: Vec3,
    pub drag: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AeroForce {
    pub generalized: V2,
    /// Sum of all strip forces in the inertial frame.
    pub total: Vec3,
}

impl AeroForce {
    /// Inertial vertical component.
    pub fn lift(&self) -> f64 {
        self.total.z
    }

    /// Inertial x component, positive along the leading-edge direction.
    pub fn thrust(&self) -> f64 {
        self.total.x
    }
}

/// Strip axes `(e_span, e_L, e_D)` of a link in the body frame.
pub fn strip_axes(m: &MassedParams, s: &BodyState, wing: Wing, seg: Segment) -> (Vec3, Vec3, Vec3) {
    let (ts, te) = s.joint(wing);
    let (t7, t8) = body::link_angles(m, ts, te);
    let span = match seg {
        Segment::Humerus => rot_x(t7) * m.humerus_vector().normalize(),
        Segment::Radius => rot_x(t8) * Vec3::y(),
    };
    let e_d = Vec3::x();
    let e_l = e_d.cross(&span);
    match wing {
        Wing::Left => (span, e_l, e_d),
        Wing::Right => (mirror(&span), mirror(&e_l), e_d),
    }
}

/// Link-frame offset of a strip's aerodynamic center.
pub fn strip_offset(m: &MassedParams, a: &AeroParams, seg: Segment, kind: StripKind, x_hat: f64) -> Vec3 {
    let (dir, span) = match seg {
        Segment::Humerus => (m.humerus_vector().normalize(), a.span_humerus),
        Segment::Radius => (Vec3::y(), a.span_radius),
    };
    match kind {
        StripKind::Spanwise => dir * (x_hat * span) - Vec3::x() * (0.25 * a.chord),
        StripKind::Chordwise => dir * (0.75 * span) - Vec3::x() * (x_hat * a.chord),
    }
}

/// Lift and drag on one strip given the body-frame velocity of the strip
/// relative to the air. Drag follows the in-plane flow seen by the strip;
/// lift is perpendicular to it within the strip plane. Returns body-frame
/// forces.
fn strip_force(a: &AeroParams, v_w: &Vec3, e_l: &Vec3, e_d: &Vec3, area: f64) -> (f64, f64, Vec3, Vec3) {
    let (beta, vr2) = angle_of_attack(v_w, e_l, e_d);
    if vr2 < MIN_SPEED_SQ {
        return (beta, 0.0, Vec3::zeros(), Vec3::zeros());
    }
    let vr = vr2.sqrt();
    let pa = v_w.dot(e_l);
    let pb = v_w.dot(e_d);
    let drag_dir = -(e_l * pa + e_d * pb) / vr;
    let lift_dir = (e_l * pb - e_d * pa) / vr;
    let (cl, cd) = lift_drag_coeffs(beta);
    let q = 0.5 * a.density * vr2 * area;
    (beta, vr, lift_dir * (q * cl), drag_dir * (q * cd))
}

/// Generalized aerodynamic force, calling `visit` on every strip in a fixed
/// order: left then right wing, humerus spanwise, radius spanwise, radius
/// chordwise.
///
/// Everything is evaluated in the body frame, where the strip axes are
/// constant; only the body velocity and the summed force cross frames.
pub fn generalized_aero_force_with<F: FnMut(&StripRecord)>(
    m: &MassedParams,
    a: &AeroParams,
    s: &BodyState,
    mut visit: F,
) -> AeroForce {
    let mut u = V2::zeros();
    let mut sum = Vec3::zeros();
    let w = s.omega();
    let v0 = s.r.transpose() * (s.velocity() - a.wind);
    let passes = [
        (Segment::Humerus, StripKind::Spanwise, a.span_humerus, a.span_segments),
        (Segment::Radius, StripKind::Spanwise, a.span_radius, a.span_segments),
        (Segment::Radius, StripKind::Chordwise, a.span_radius, a.chord_segments),
    ];
    for wing in Wing::BOTH {
        let c = wing.column();
        for &(seg, kind, span, n) in &passes {
            let (e_span, e_l, e_d) = strip_axes(m, s, wing, seg);
            let (e_l, e_d) = match kind {
                StripKind::Spanwise => (e_l, e_d),
                StripKind::Chordwise => (e_l, e_span),
            };
            let area = a.chord * span / n as f64;
            let frame = body::link_frame(m, s, wing, seg);
            for k in 0..n {
                let x_hat = (k as f64 + 0.5) / n as f64;
                let off = strip_offset(m, a, seg, kind, x_hat);
                let rp = frame.point(m, &off);
                let v_w = v0 + w.cross(&rp.p) + rp.pd;
                let (beta, vr, lift, drag) = strip_force(a, &v_w, &e_l, &e_d, area);
                let df = lift + drag;
                u[c] += rp.dp[0].dot(&df);
                u[c + 1] += rp.dp[1].dot(&df);
                let tau = rp.p.cross(&df);
                for i in 0..3 {
                    u[ROT + i] += tau[i];
                }
                sum += df;
                visit(&StripRecord {
                    wing,
                    segment: seg,
                    kind,
                    x_hat,
                    area,
                    point: rp.p,
                    beta_deg: beta,
                    v_r: vr,
                    lift,
                    drag,
                });
            }
        }
    }
    let total = s.r * sum;
    for i in 0..3 {
        u[TRANS + i] = total[i];
    }
    AeroForce { generalized: u, total }
}

pub fn generalized_aero_force(m: &MassedParams, a: &AeroParams, s: &BodyState) -> AeroForce {
    generalized_aero_force_with(m, a, s, |_| {})
}
