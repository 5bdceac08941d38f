//! Torsional joint springs and the guide spring-dampers through which the
//! linkage drives the wings.

use crate::body::{self, BodyState, Jac, RelPoint, Segment, Wing, V2};
use crate::error::{Error, Result};
use crate::linkage::GuidePoints;
use crate::math::{lift_planar, mirror, rot_x, Vec3};
use crate::params::MassedParams;
use core::f64::consts::TAU;
#[allow(unused_imports)]
use num_traits::Float;

const MIN_SEPARATION: f64 = 1e-12;

/// `u_i = -(k (theta - theta0) + b thetadot)` on the four wing joints.
pub fn torsional_forces(m: &MassedParams, s: &BodyState) -> V2 {
    let mut u = V2::zeros();
    for i in 0..4 {
        let j = i % 2;
        u[i] = -(m.joint_stiffness[j] * (s.q[i] - m.joint_rest[j]) + m.joint_damping[j] * s.v[i]);
    }
    u
}

/// Axial spring-damper between a linkage point `a` and a wing point `b`.
/// Returns the force on `b`, directed along `(a - b) / |a - b|`.
pub fn spring_damper(
    pa: &Vec3,
    va: &Vec3,
    pb: &Vec3,
    vb: &Vec3,
    k: f64,
    b: f64,
    rest: f64,
    what: &'static str,
) -> Result<Vec3> {
    let d = pa - pb;
    let len = d.norm();
    if !(len >= MIN_SEPARATION) {
        return Err(Error::CoincidentGuide(what));
    }
    let e = d / len;
    Ok((k * (len - rest) + b * (va - vb).dot(&e)) * e)
}

pub fn map_point_force(j: &Jac, f: &Vec3) -> V2 {
    j.transpose() * f
}

/// Local offsets of the guide driver points 6 (humerus) and 17 (radius).
pub fn driver_offsets(m: &MassedParams) -> (Vec3, Vec3) {
    let lh = m.humerus_vector();
    (
        lh * (m.humerus_guide_distance / lh.norm()),
        Vec3::new(0.0, m.radius_guide_distance, 0.0),
    )
}

/// Body-frame guide end effectors of one wing, lifted out of the linkage
/// plane at the shoulder and mirrored for the right wing.
pub fn guide_targets(m: &MassedParams, gp: &GuidePoints, wing: Wing) -> [(Vec3, Vec3); 2] {
    let x = m.shoulder.x;
    let lift = |p, v| {
        let (p, v) = (lift_planar(x, p), lift_planar(0.0, v));
        match wing {
            Wing::Left => (p, v),
            Wing::Right => (mirror(&p), mirror(&v)),
        }
    };
    [lift(&gp.p5, &gp.v5), lift(&gp.p16, &gp.v16)]
}

/// Force on one driver point together with its kinematics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuideForce {
    pub wing: Wing,
    pub driver: RelPoint,
    /// Linkage-side end effector in the body frame.
    pub target: Vec3,
    /// Body-frame force on the driver point.
    pub force: Vec3,
}

/// Guide forces `[6_L, 17_L, 6_R, 17_R]`.
pub fn guide_forces(m: &MassedParams, gp: &GuidePoints, s: &BodyState) -> Result<[GuideForce; 4]> {
    let (a6, a17) = driver_offsets(m);
    let one = |wing: Wing, seg: Segment| -> Result<GuideForce> {
        let targets = guide_targets(m, gp, wing);
        let (a, (pt, vt), rest, what) = match seg {
            Segment::Humerus => (a6, targets[0], m.guide_rest[0], "5 and 6"),
            Segment::Radius => (a17, targets[1], m.guide_rest[1], "16 and 17"),
        };
        let driver = body::rel_point(m, s, wing, seg, &a);
        let force = spring_damper(
            &pt,
            &vt,
            &driver.p,
            &driver.pd,
            m.guide_stiffness,
            m.guide_damping,
            rest,
            what,
        )?;
        Ok(GuideForce {
            wing,
            driver,
            target: pt,
            force,
        })
    };
    Ok([
        one(Wing::Left, Segment::Humerus)?,
        one(Wing::Left, Segment::Radius)?,
        one(Wing::Right, Segment::Humerus)?,
        one(Wing::Right, Segment::Radius)?,
    ])
}

/// Generalized force of one guide. The spring acts on the wing at the driver
/// point and reacts on the body through the linkage mount at the end
/// effector, so the pair is internal to the massed system.
pub fn guide_wrench_of(s: &BodyState, g: &GuideForce) -> V2 {
    let f = s.r * g.force;
    map_point_force(&body::point_jacobian(s, g.wing, &g.driver), &f)
        - map_point_force(&body::body_point_jacobian(s, &g.target), &f)
}

pub fn assemble_guide_wrench(s: &BodyState, forces: &[GuideForce]) -> V2 {
    forces.iter().fold(V2::zeros(), |acc, g| acc + guide_wrench_of(s, g))
}

/// Link angle about the body x axis that puts a driver with local offset `a`,
/// pivoting at `pivot`, at distance `rest` from `target`. Everything lies in
/// one plane normal to x. When `rest` is out of reach the closest approach
/// is taken. Of the two solutions, the one nearest `guess` wins.
fn circle_alignment(pivot: &Vec3, a: &Vec3, target: &Vec3, rest: f64, guess: f64) -> Result<f64> {
    let r = (a.y * a.y + a.z * a.z).sqrt();
    let (dy, dz) = (target.y - pivot.y, target.z - pivot.z);
    let dist = (dy * dy + dz * dz).sqrt();
    if r < MIN_SEPARATION || dist < MIN_SEPARATION {
        return Err(Error::Singular("guide alignment"));
    }
    let phase = a.z.atan2(a.y);
    let bearing = dz.atan2(dy);
    let c = ((r * r + dist * dist - rest * rest) / (2.0 * r * dist)).clamp(-1.0, 1.0);
    let spread = c.acos();
    let nearest = |psi: f64| {
        let phi = psi - phase;
        phi + TAU * ((guess - phi) / TAU).round()
    };
    let (p1, p2) = (nearest(bearing + spread), nearest(bearing - spread));
    Ok(if (p1 - guess).abs() <= (p2 - guess).abs() { p1 } else { p2 })
}

/// Shoulder and elbow angles at which both guides of the left wing sit at
/// their rest lengths, or as close as the geometry allows. Solutions nearest
/// `guess` are preferred. The right wing uses the same angles by symmetry.
pub fn guide_aligned_angles(m: &MassedParams, gp: &GuidePoints, guess: [f64; 2]) -> Result<[f64; 2]> {
    let (a6, a17) = driver_offsets(m);
    let targets = guide_targets(m, gp, Wing::Left);
    let (g7, g8) = body::link_angles(m, guess[0], guess[1]);
    let t7 = circle_alignment(&m.shoulder, &a6, &targets[0].0, m.guide_rest[0], g7)?;
    let elbow = m.shoulder + rot_x(t7) * m.humerus_vector();
    let t8 = circle_alignment(&elbow, &a17, &targets[1].0, m.guide_rest[1], g8)?;
    let ts = t7 + m.shoulder_offset;
    Ok([ts, t8 - ts - m.shoulder_offset])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::{self, LinkageState};
    use crate::params::LinkageGeometry;

    fn linkage_at_rest() -> (LinkageGeometry, LinkageState) {
        let g = LinkageGeometry::default();
        let q = linkage::assemble_from_nominal(&g, 0.0, &g.fdc_nominal).unwrap();
        (g, LinkageState { q, qd: linkage::Q1::zeros() })
    }

    #[test]
    fn rest_joints_carry_no_torque_and_deflection_restores() {
        let m = MassedParams::default();
        let r = m.joint_rest;
        let mut s = BodyState::at_rest([r[0], r[1], r[0], r[1]], crate::math::Mat3::identity());
        assert_eq!(torsional_forces(&m, &s), V2::zeros());
        s.q[1] += 0.1;
        let u = torsional_forces(&m, &s);
        assert!((u[1] + m.joint_stiffness[1] * 0.1).abs() < 1e-15);
    }

    #[test]
    fn spring_at_rest_length_with_transverse_motion_is_silent() {
        let f = spring_damper(
            &Vec3::new(0.0, 0.0, 0.008),
            &Vec3::new(0.0, 3.0, 0.0),
            &Vec3::zeros(),
            &Vec3::zeros(),
            2e4,
            10.0,
            0.008,
            "test",
        )
        .unwrap();
        assert!(f.norm() < 1e-12);
        let f = spring_damper(&Vec3::new(0.0, 0.0, 0.009), &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), 2e4, 10.0, 0.008, "t").unwrap();
        assert!((f - Vec3::new(0.0, 0.0, 20.0)).norm() < 1e-9);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let p = Vec3::new(0.1, 0.2, 0.3);
        let r = spring_damper(&p, &p, &p, &p, 1.0, 1.0, 0.0, "5 and 6");
        assert_eq!(r, Err(Error::CoincidentGuide("5 and 6")));
    }

    #[test]
    fn aligned_wings_feel_no_guide_force() {
        let m = MassedParams::default();
        let (g, ls) = linkage_at_rest();
        let gp = linkage::guide_points(&g, &ls.q, &ls.qd);
        let [ts, te] = guide_aligned_angles(&m, &gp, m.joint_rest).unwrap();
        let s = BodyState::at_rest([ts, te, ts, te], crate::math::rot_y(0.5));
        let forces = guide_forces(&m, &gp, &s).unwrap();
        for f in &forces {
            assert!(f.force.norm() < 1e-8, "{:?}", f.force);
        }
        assert!(assemble_guide_wrench(&s, &forces).amax() < 1e-9);
    }

    #[test]
    fn guide_pair_leaves_body_components_untouched() {
        let m = MassedParams::default();
        let (g, ls) = linkage_at_rest();
        let gp = linkage::guide_points(&g, &ls.q, &ls.qd);
        let s = BodyState::at_rest([0.1, -0.3, 0.2, -0.1], crate::math::rot_y(0.3));
        let forces = guide_forces(&m, &gp, &s).unwrap();
        let u = assemble_guide_wrench(&s, &forces);
        assert!(u.rows(4, 6).amax() < 1e-12 * u.amax().max(1.0));
        assert!(u.rows(0, 4).amax() > 0.0);
    }
}
