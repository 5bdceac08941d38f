//! Massed subsystem: body plus humerus and radius on each side.
//!
//! Generalized velocity is `[thS_L, thE_L, thS_R, thE_R, xdot_B (inertial),
//! omega_B (body)]`. Mass matrix and bias vector come from the velocity
//! Jacobians of each body (Kane's projection), so the equations never need
//! symbolic Lagrangian expansion.

use crate::error::{Error, Result};
use crate::math::{mirror, mirror_matrix, rot_x, skew, Mat3, Vec3};
use crate::params::{MassedParams, MomentumSign};
use nalgebra::{Cholesky, SMatrix, SVector};

pub type Q2 = SVector<f64, 7>;
pub type V2 = SVector<f64, 10>;
pub type Mass = SMatrix<f64, 10, 10>;
pub type Jac = SMatrix<f64, 3, 10>;

/// Column offset of body translation and rotation in the velocity vector.
pub const TRANS: usize = 4;
pub const ROT: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wing {
    Left,
    Right,
}

impl Wing {
    pub const BOTH: [Wing; 2] = [Wing::Left, Wing::Right];

    /// Column of the shoulder angle; the elbow angle follows.
    #[inline]
    pub fn column(self) -> usize {
        match self {
            Wing::Left => 0,
            Wing::Right => 2,
        }
    }

    #[inline]
    fn sign(self) -> f64 {
        match self {
            Wing::Left => 1.0,
            Wing::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment {
    Humerus,
    Radius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub q: Q2,
    pub v: V2,
    pub r: Mat3,
}

impl BodyState {
    pub fn at_rest(joints: [f64; 4], r: Mat3) -> Self {
        let mut q = Q2::zeros();
        for i in 0..4 {
            q[i] = joints[i];
        }
        Self {
            q,
            v: V2::zeros(),
            r,
        }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.q[4], self.q[5], self.q[6])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.v[TRANS], self.v[TRANS + 1], self.v[TRANS + 2])
    }

    pub fn omega(&self) -> Vec3 {
        Vec3::new(self.v[ROT], self.v[ROT + 1], self.v[ROT + 2])
    }

    pub fn joint(&self, wing: Wing) -> (f64, f64) {
        let c = wing.column();
        (self.q[c], self.q[c + 1])
    }

    pub fn joint_rate(&self, wing: Wing) -> (f64, f64) {
        let c = wing.column();
        (self.v[c], self.v[c + 1])
    }
}

/// A point fixed on a wing link, expressed in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelPoint {
    pub p: Vec3,
    /// Velocity relative to the body frame.
    pub pd: Vec3,
    /// Partials with respect to the wing's shoulder and elbow angles.
    pub dp: [Vec3; 2],
    /// Joint-rate-squared part of the relative acceleration.
    pub pdd: Vec3,
}

#[inline]
fn ex_cross(w: &Vec3) -> Vec3 {
    Vec3::new(0.0, -w.z, w.y)
}

/// Joint angles `(theta7, theta8)` of the wing links about the body x axis.
#[inline]
pub fn link_angles(m: &MassedParams, ts: f64, te: f64) -> (f64, f64) {
    let a = m.shoulder_offset;
    (ts - a, te + ts + a)
}

/// Orientation and rates of one wing link, shared by every point on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkFrame {
    wing: Wing,
    /// Humerus contribution to points on the radius, zero on the humerus.
    base: Vec3,
    rot: Mat3,
    w7: f64,
    w8: f64,
    radius: bool,
}

pub fn link_frame(m: &MassedParams, s: &BodyState, wing: Wing, seg: Segment) -> LinkFrame {
    let (ts, te) = s.joint(wing);
    let (tsd, ted) = s.joint_rate(wing);
    let (t7, t8) = link_angles(m, ts, te);
    let (base, rot, radius) = match seg {
        Segment::Humerus => (Vec3::zeros(), rot_x(t7), false),
        Segment::Radius => (rot_x(t7) * m.humerus_vector(), rot_x(t8), true),
    };
    LinkFrame {
        wing,
        base,
        rot,
        w7: tsd,
        w8: tsd + ted,
        radius,
    }
}

impl LinkFrame {
    /// Body-frame kinematics of the point with local offset `a`.
    pub fn point(&self, m: &MassedParams, a: &Vec3) -> RelPoint {
        let (w1, w2) = if self.radius {
            (self.base, self.rot * a)
        } else {
            (self.rot * a, Vec3::zeros())
        };
        let d1 = ex_cross(&w1);
        let d2 = ex_cross(&w2);
        let p = m.shoulder + w1 + w2;
        let pd = self.w7 * d1 + self.w8 * d2;
        let pdd = self.w7 * self.w7 * ex_cross(&d1) + self.w8 * self.w8 * ex_cross(&d2);
        let dp = [d1 + d2, d2];
        match self.wing {
            Wing::Left => RelPoint { p, pd, dp, pdd },
            Wing::Right => RelPoint {
                p: mirror(&p),
                pd: mirror(&pd),
                dp: [mirror(&dp[0]), mirror(&dp[1])],
                pdd: mirror(&pdd),
            },
        }
    }
}

/// Body-frame kinematics of a point with local offset `a` on a link. For the
/// humerus `a` is measured from the shoulder in the humerus frame, for the
/// radius from the elbow in the radius frame. The right wing mirrors the
/// left-wing expression across the body x-z plane.
pub fn rel_point(m: &MassedParams, s: &BodyState, wing: Wing, seg: Segment, a: &Vec3) -> RelPoint {
    link_frame(m, s, wing, seg).point(m, a)
}

/// Inertial velocity Jacobian of a wing point, `d xdot / d v`.
pub fn point_jacobian(s: &BodyState, wing: Wing, rp: &RelPoint) -> Jac {
    let mut j = Jac::zeros();
    let c = wing.column();
    j.fixed_view_mut::<3, 1>(0, c).copy_from(&(s.r * rp.dp[0]));
    j.fixed_view_mut::<3, 1>(0, c + 1).copy_from(&(s.r * rp.dp[1]));
    j.fixed_view_mut::<3, 3>(0, TRANS).copy_from(&Mat3::identity());
    j.fixed_view_mut::<3, 3>(0, ROT).copy_from(&(-s.r * skew(&rp.p)));
    j
}

/// Jacobian of a point rigidly attached to the body.
pub fn body_point_jacobian(s: &BodyState, p: &Vec3) -> Jac {
    let mut j = Jac::zeros();
    j.fixed_view_mut::<3, 3>(0, TRANS).copy_from(&Mat3::identity());
    j.fixed_view_mut::<3, 3>(0, ROT).copy_from(&(-s.r * skew(p)));
    j
}

pub fn inertial_position(s: &BodyState, p: &Vec3) -> Vec3 {
    s.position() + s.r * p
}

pub fn inertial_velocity(s: &BodyState, rp: &RelPoint) -> Vec3 {
    s.velocity() + s.r * (s.omega().cross(&rp.p) + rp.pd)
}

/// `J^T f` for a body-frame force `f` applied at a wing point. Equivalent to
/// `point_jacobian(..)^T * (R f)` without forming the Jacobian.
pub fn map_body_force(s: &BodyState, wing: Wing, rp: &RelPoint, f: &Vec3) -> V2 {
    let mut u = V2::zeros();
    let c = wing.column();
    u[c] = rp.dp[0].dot(f);
    u[c + 1] = rp.dp[1].dot(f);
    let fi = s.r * f;
    let tau = rp.p.cross(f);
    for k in 0..3 {
        u[TRANS + k] = fi[k];
        u[ROT + k] = tau[k];
    }
    u
}

/// Kinematics of one of the five massed bodies at its center of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkKinematics {
    pub mass: f64,
    /// Inertia in the link frame.
    pub inertia: Mat3,
    /// Link orientation relative to the body.
    pub r_rel: Mat3,
    /// Body-frame center of mass.
    pub p: Vec3,
    pub x: Vec3,
    pub xd: Vec3,
    /// Angular velocity in the link frame.
    pub omega: Vec3,
    pub jv: Jac,
    pub jw: Jac,
    /// Inertial acceleration and link-frame angular acceleration at `vdot = 0`.
    pub a_bias: Vec3,
    pub w_bias: Vec3,
}

impl LinkKinematics {
    /// Angular velocity of the link expressed in the body frame.
    pub fn omega_body(&self) -> Vec3 {
        self.r_rel * self.omega
    }
}

/// Center-of-mass kinematics of `[body, H_L, R_L, H_R, R_R]`.
pub fn com_kinematics(m: &MassedParams, s: &BodyState) -> [LinkKinematics; 5] {
    let w = s.omega();
    let mut jw_b = Jac::zeros();
    jw_b.fixed_view_mut::<3, 3>(0, ROT).copy_from(&Mat3::identity());
    let body = LinkKinematics {
        mass: m.body.mass,
        inertia: m.body.inertia,
        r_rel: Mat3::identity(),
        p: Vec3::zeros(),
        x: s.position(),
        xd: s.velocity(),
        omega: w,
        jv: body_point_jacobian(s, &Vec3::zeros()),
        jw: jw_b,
        a_bias: Vec3::zeros(),
        w_bias: Vec3::zeros(),
    };
    let sm = mirror_matrix();
    let link = |wing: Wing, seg: Segment| {
        let (inert, a) = match seg {
            Segment::Humerus => (&m.humerus, m.humerus_vector() * 0.5),
            Segment::Radius => (&m.radius, m.radius_vector() * 0.5),
        };
        let rp = rel_point(m, s, wing, seg, &a);
        let (ts, te) = s.joint(wing);
        let (tsd, ted) = s.joint_rate(wing);
        let (t7, t8) = link_angles(m, ts, te);
        let sg = wing.sign();
        let (phi, phid) = match seg {
            Segment::Humerus => (t7, tsd),
            Segment::Radius => (t8, tsd + ted),
        };
        let r_rel = rot_x(sg * phi);
        let wl = r_rel.transpose() * w;
        let omega = wl + Vec3::new(sg * phid, 0.0, 0.0);
        let mut jw = Jac::zeros();
        let c = wing.column();
        jw[(0, c)] = sg;
        if seg == Segment::Radius {
            jw[(0, c + 1)] = sg;
        }
        jw.fixed_view_mut::<3, 3>(0, ROT).copy_from(&r_rel.transpose());
        let inertia = match wing {
            Wing::Left => inert.inertia,
            Wing::Right => sm * inert.inertia * sm,
        };
        LinkKinematics {
            mass: inert.mass,
            inertia,
            r_rel,
            p: rp.p,
            x: inertial_position(s, &rp.p),
            xd: inertial_velocity(s, &rp),
            omega,
            jv: point_jacobian(s, wing, &rp),
            jw,
            a_bias: s.r * (w.cross(&w.cross(&rp.p)) + 2.0 * w.cross(&rp.pd) + rp.pdd),
            w_bias: -(sg * phid) * Vec3::x().cross(&wl),
        }
    };
    [
        body,
        link(Wing::Left, Segment::Humerus),
        link(Wing::Left, Segment::Radius),
        link(Wing::Right, Segment::Humerus),
        link(Wing::Right, Segment::Radius),
    ]
}

pub fn mass_matrix_from(links: &[LinkKinematics; 5]) -> Mass {
    let mut mm = Mass::zeros();
    for l in links {
        mm += l.mass * l.jv.transpose() * l.jv + l.jw.transpose() * l.inertia * l.jw;
    }
    // Exact symmetry regardless of rounding in the products above.
    (mm + mm.transpose()) * 0.5
}

pub fn mass_matrix(m: &MassedParams, s: &BodyState) -> Mass {
    mass_matrix_from(&com_kinematics(m, s))
}

pub fn bias_forces_from(m: &MassedParams, links: &[LinkKinematics; 5]) -> V2 {
    let mut h = V2::zeros();
    for l in links {
        let gvec = Vec3::new(0.0, 0.0, m.gravity);
        let iw = l.inertia * l.omega;
        h += l.jv.transpose() * (l.mass * (l.a_bias + gvec));
        h += l.jw.transpose() * (l.inertia * l.w_bias + l.omega.cross(&iw));
    }
    h
}

/// Coriolis, centrifugal, gyroscopic and gravity terms `h2`.
pub fn bias_forces(m: &MassedParams, s: &BodyState) -> V2 {
    bias_forces_from(m, &com_kinematics(m, s))
}

/// Time derivatives `(vdot, Rdot)` of the massed system under `force`.
pub fn massed_accel(m: &MassedParams, s: &BodyState, force: &V2) -> Result<(V2, Mat3)> {
    let links = com_kinematics(m, s);
    let mm = mass_matrix_from(&links);
    let h = bias_forces_from(m, &links);
    let chol = Cholesky::new(mm).ok_or(Error::IllConditioned)?;
    let vd = chol.solve(&(force - h));
    if !vd.iter().all(|x| x.is_finite()) {
        return Err(Error::IllConditioned);
    }
    Ok((vd, s.r * skew(&s.omega())))
}

/// Kinetic and gravitational potential energy, evaluated body by body.
pub fn energies(m: &MassedParams, s: &BodyState) -> (f64, f64) {
    let mut t = 0.0;
    let mut u = 0.0;
    for l in com_kinematics(m, s) {
        t += 0.5 * (l.mass * l.xd.norm_squared() + l.omega.dot(&(l.inertia * l.omega)));
        u += l.mass * m.gravity * l.x.z;
    }
    (t, u)
}

pub fn linear_momentum(m: &MassedParams, s: &BodyState) -> Vec3 {
    com_kinematics(m, s)
        .iter()
        .fold(Vec3::zeros(), |acc, l| acc + l.mass * l.xd)
}

pub fn center_of_mass(m: &MassedParams, s: &BodyState) -> Vec3 {
    let links = com_kinematics(m, s);
    let total: f64 = links.iter().map(|l| l.mass).sum();
    links.iter().fold(Vec3::zeros(), |acc, l| acc + l.mass * l.x) / total
}

/// Angular-momentum metric `sum R I w -/+ m (x - x_com) x xdot`. The
/// verbatim form subtracts the orbital term.
pub fn angular_momentum(m: &MassedParams, s: &BodyState, sign: MomentumSign) -> Vec3 {
    let links = com_kinematics(m, s);
    let total: f64 = links.iter().map(|l| l.mass).sum();
    let com = links.iter().fold(Vec3::zeros(), |acc, l| acc + l.mass * l.x) / total;
    let orbital = match sign {
        MomentumSign::Verbatim => -1.0,
        MomentumSign::Conventional => 1.0,
    };
    links.iter().fold(Vec3::zeros(), |acc, l| {
        let spin = s.r * l.r_rel * (l.inertia * l.omega);
        acc + spin + orbital * l.mass * (l.x - com).cross(&l.xd)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rot_y;

    fn sample() -> (MassedParams, BodyState) {
        let m = MassedParams::default();
        let mut s = BodyState::at_rest([0.2, -0.4, -0.1, 0.3], rot_y(0.5));
        s.q[4] = 0.3;
        s.q[6] = -0.2;
        s.v = V2::from_column_slice(&[1.1, -0.7, 0.4, 0.9, 0.5, -0.2, 0.3, 0.8, -1.5, 0.6]);
        (m, s)
    }

    #[test]
    fn zero_angles_put_humerus_center_at_half_link() {
        let m = MassedParams::default();
        let a = m.shoulder_offset;
        let s = BodyState::at_rest([a, -2.0 * a, a, -2.0 * a], Mat3::identity());
        let links = com_kinematics(&m, &s);
        let want = m.shoulder + m.humerus_vector() * 0.5;
        assert!((links[1].x - want).norm() < 1e-15);
        assert!((links[3].x - mirror(&want)).norm() < 1e-15);
        let elbow = m.shoulder + m.humerus_vector() + m.radius_vector() * 0.5;
        assert!((links[2].x - elbow).norm() < 1e-15);
    }

    #[test]
    fn translation_block_is_total_mass() {
        let (m, s) = sample();
        let mm = mass_matrix(&m, &s);
        let tb = mm.fixed_view::<3, 3>(TRANS, TRANS).into_owned();
        assert!((tb - Mat3::identity() * m.total_mass()).amax() < 1e-15);
    }

    #[test]
    fn statics_reduce_to_weight() {
        let m = MassedParams::default();
        let s = BodyState::at_rest([0.1, 0.2, 0.1, 0.2], Mat3::identity());
        let h = bias_forces(&m, &s);
        assert!(h[TRANS].abs() < 1e-15 && h[TRANS + 1].abs() < 1e-15);
        assert!((h[TRANS + 2] - m.gravity * m.total_mass()).abs() < 1e-14);
    }

    #[test]
    fn kinetic_energy_is_mass_matrix_quadratic_form() {
        let (m, s) = sample();
        let (t, _) = energies(&m, &s);
        let tq = 0.5 * s.v.dot(&(mass_matrix(&m, &s) * s.v));
        assert!((t - tq).abs() < 1e-10 * t.max(1.0));
    }

    #[test]
    fn balanced_force_gives_no_acceleration() {
        let (m, s) = sample();
        let h = bias_forces(&m, &s);
        let (vd, rd) = massed_accel(&m, &s, &h).unwrap();
        assert!(vd.amax() < 1e-9);
        assert!((rd - s.r * skew(&s.omega())).amax() == 0.0);
    }

    #[test]
    fn free_fall_accelerates_body_at_g() {
        let m = MassedParams::default();
        let s = BodyState::at_rest([0.3, -0.2, 0.3, -0.2], rot_y(0.4));
        let (vd, _) = massed_accel(&m, &s, &V2::zeros()).unwrap();
        assert!(vd[TRANS].abs() < 1e-12 && vd[TRANS + 1].abs() < 1e-12);
        assert!((vd[TRANS + 2] + m.gravity).abs() < 1e-12);
        assert!(vd.rows(0, 4).amax() < 1e-10);
    }

    #[test]
    fn body_point_force_maps_to_translation_only() {
        let (_, s) = sample();
        let f = Vec3::new(0.3, -1.0, 2.0);
        let u = body_point_jacobian(&s, &Vec3::zeros()).transpose() * f;
        for k in 0..3 {
            assert_eq!(u[TRANS + k], f[k]);
        }
        assert!(u.rows(0, 4).amax() == 0.0 && u.rows(ROT, 3).amax() == 0.0);
    }

    #[test]
    fn reflected_state_gives_reflected_momentum() {
        let m = MassedParams::default();
        let s = BodyState::at_rest([0.3, -0.2, 0.3, -0.2], Mat3::identity());
        let mut sv = s;
        sv.v = V2::from_column_slice(&[2.0, -1.0, 2.0, -1.0, 0.5, 0.0, 0.1, 0.0, 0.3, 0.0]);
        let p = linear_momentum(&m, &sv);
        assert!(p.y.abs() < 1e-15);
    }
}
