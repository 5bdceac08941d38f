//! Small geometric helpers shared by the kinematics modules.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
#[allow(unused_imports)]
use num_traits::Float;

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Unit vector at angle `theta` from the planar y axis, i.e. `R(theta) [1, 0]`.
#[inline]
pub fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// `d/dtheta unit(theta)`.
#[inline]
pub fn unit_perp(theta: f64) -> Vec2 {
    Vec2::new(-theta.sin(), theta.cos())
}

pub fn rot2(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Rotation about the body x axis.
pub fn rot_x(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Reflection across the body x-z plane, used to mirror left-wing quantities.
pub fn mirror(v: &Vec3) -> Vec3 {
    Vec3::new(v.x, -v.y, v.z)
}

pub fn mirror_matrix() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(1.0, -1.0, 1.0))
}

/// Planar body-frame (y, z) point lifted into 3-D at body x coordinate `x`.
pub fn lift_planar(x: f64, p: &Vec2) -> Vec3 {
    Vec3::new(x, p.x, p.y)
}

/// Orthogonal polar factor of a near-rotation matrix (Higham's Newton
/// iteration `X <- (X + X^-T) / 2`). Returns `None` if the matrix is singular.
pub fn polar_orthonormalize(r: &Mat3) -> Option<Mat3> {
    let mut x = *r;
    for _ in 0..8 {
        let inv_t = x.try_inverse()?.transpose();
        let next = (x + inv_t) * 0.5;
        let delta = (next - x).abs().max();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Some(x)
}

/// Pitch angle of a body rotation using the yaw-pitch-roll (Z-Y-X) sequence,
/// `R = Rz(psi) Ry(theta) Rx(phi)`.
pub fn pitch_of(r: &Mat3) -> f64 {
    (-r[(2, 0)]).clamp(-1.0, 1.0).asin()
}

pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rot_x_matches_planar_rotation() {
        let th = 0.7;
        let p = Vec2::new(0.3, -1.2);
        let q = rot_x(th) * lift_planar(0.0, &p);
        let r = rot2(th) * p;
        assert!((q.y - r.x).abs() < 1e-15 && (q.z - r.y).abs() < 1e-15);
    }

    #[test]
    fn pitch_round_trips_through_zyx() {
        let r = rot_z(0.3) * rot_y(0.45) * rot_x(-0.2);
        assert!((pitch_of(&r) - 0.45).abs() < 1e-14);
    }

    #[test]
    fn polar_restores_orthonormality() {
        let mut r = rot_z(0.4) * rot_y(-0.3);
        r[(0, 1)] += 1e-4;
        r[(2, 2)] -= 2e-4;
        let q = polar_orthonormalize(&r).unwrap();
        assert!(orthonormality_error(&q) < 1e-14);
        assert!((q.determinant() - 1.0).abs() < 1e-14);
        assert!((q - r).norm() < 1e-3);
    }
}
