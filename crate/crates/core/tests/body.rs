mod common;

use aerobat_core::body::*;
use aerobat_core::math::{mirror_matrix, rot_y, skew, Mat3, Vec3};
use aerobat_core::params::MassedParams;
use common::{random_body, rng, uniform};
use nalgebra::Rotation3;
use proptest::prelude::*;

/// Moves the state along its own velocity for time `h`, holding `v` fixed.
fn drift(s: &BodyState, h: f64) -> BodyState {
    let mut n = *s;
    for i in 0..4 {
        n.q[i] += h * s.v[i];
    }
    for i in 0..3 {
        n.q[4 + i] += h * s.v[TRANS + i];
    }
    n.r = s.r * Rotation3::new(s.omega() * h).into_inner();
    n
}

fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// Link angular velocity in the link frame from rotations at `t +/- h`.
fn fd_omega(m: &MassedParams, s: &BodyState, k: usize, h: f64) -> Vec3 {
    let rot = |st: &BodyState| st.r * com_kinematics(m, st)[k].r_rel;
    let (rp, rm) = (rot(&drift(s, h)), rot(&drift(s, -h)));
    vee(&(rot(s).transpose() * (rp - rm) / (2.0 * h)))
}

#[test]
fn point_jacobians_match_position_differences() {
    let m = MassedParams::default();
    let mut r = rng(1);
    let h = 1e-6;
    for _ in 0..30 {
        let s = random_body(&mut r);
        let links = com_kinematics(&m, &s);
        for col in 0..10 {
            let mut dir = s;
            dir.v = V2::zeros();
            dir.v[col] = 1.0;
            let (p, q) = (com_kinematics(&m, &drift(&dir, h)), com_kinematics(&m, &drift(&dir, -h)));
            for k in 0..5 {
                let fd = (p[k].x - q[k].x) / (2.0 * h);
                let err = (fd - links[k].jv.column(col)).amax();
                assert!(err < 1e-6, "link {k} column {col}: {err}");
            }
        }
    }
}

#[test]
fn kinetic_energy_matches_differentiated_motion() {
    let m = MassedParams::default();
    let mut r = rng(2);
    let h = 1e-6;
    for _ in 0..30 {
        let s = random_body(&mut r);
        let (p, q) = (com_kinematics(&m, &drift(&s, h)), com_kinematics(&m, &drift(&s, -h)));
        let links = com_kinematics(&m, &s);
        let mut t = 0.0;
        for k in 0..5 {
            let xd = (p[k].x - q[k].x) / (2.0 * h);
            let w = fd_omega(&m, &s, k, h);
            t += 0.5 * (links[k].mass * xd.norm_squared() + w.dot(&(links[k].inertia * w)));
        }
        let quad = 0.5 * s.v.dot(&(mass_matrix(&m, &s) * s.v));
        assert!((quad - t).abs() < 1e-8 * t.max(1e-3), "{quad} vs {t}");
        assert!((quad - energies(&m, &s).0).abs() < 1e-10 * quad.max(1.0));
    }
}

#[test]
fn mass_matrix_is_symmetric_positive_definite_with_total_mass_block() {
    let m = MassedParams::default();
    let mut r = rng(3);
    for _ in 0..100 {
        let s = random_body(&mut r);
        let mm = mass_matrix(&m, &s);
        assert!((mm - mm.transpose()).amax() <= 1e-12);
        assert!(mm.cholesky().is_some());
        let block = mm.fixed_view::<3, 3>(TRANS, TRANS).into_owned();
        assert!((block - Mat3::identity() * m.total_mass()).amax() < 1e-12);
    }
}

/// With `vdot = 0` each center of mass moves along a path whose
/// acceleration and angular acceleration are recovered by differencing.
/// Projecting the resulting inertial loads reproduces `h2`.
#[test]
fn bias_matches_accelerations_along_constant_velocity_path() {
    let m = MassedParams::default();
    let mut r = rng(4);
    let h = 1e-5;
    for _ in 0..30 {
        let s = random_body(&mut r);
        let links = com_kinematics(&m, &s);
        let (p, q) = (com_kinematics(&m, &drift(&s, h)), com_kinematics(&m, &drift(&s, -h)));
        let g = Vec3::new(0.0, 0.0, m.gravity);
        let mut want = V2::zeros();
        for k in 0..5 {
            let l = &links[k];
            let a = (p[k].xd - q[k].xd) / (2.0 * h);
            let alpha = (p[k].omega - q[k].omega) / (2.0 * h);
            want += l.jv.transpose() * (l.mass * (a + g));
            want += l.jw.transpose() * (l.inertia * alpha + l.omega.cross(&(l.inertia * l.omega)));
        }
        let got = bias_forces(&m, &s);
        assert!((got - want).amax() < 1e-6, "{}", (got - want).amax());
    }
}

/// Energy identity of the Lagrangian form: without gravity,
/// `v' h2 = v' Mdot v / 2`.
#[test]
fn bias_power_equals_half_mass_matrix_rate() {
    let mut m = MassedParams::default();
    m.gravity = 0.0;
    let mut r = rng(5);
    let h = 1e-6;
    for _ in 0..30 {
        let s = random_body(&mut r);
        let mdot = (mass_matrix(&m, &drift(&s, h)) - mass_matrix(&m, &drift(&s, -h))) / (2.0 * h);
        let lhs = s.v.dot(&bias_forces(&m, &s));
        let rhs = 0.5 * s.v.dot(&(mdot * s.v));
        assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
    }
}

#[test]
fn statics_reduce_to_gravity() {
    let m = MassedParams::default();
    let s = BodyState::at_rest([0.2, -0.3, 0.2, -0.3], Mat3::identity());
    let h = bias_forces(&m, &s);
    let w = m.gravity * m.total_mass();
    assert!((h.fixed_rows::<3>(TRANS) - Vec3::new(0.0, 0.0, w)).amax() < 1e-14);
}

#[test]
fn composite_gyroscopic_torque() {
    let mut m = MassedParams::default();
    m.gravity = 0.0;
    let mut r = rng(6);
    for _ in 0..10 {
        let mut s = random_body(&mut r);
        s.v = V2::zeros();
        let w = Vec3::new(0.0, 0.0, uniform(&mut r, -4.0, 4.0));
        s.v.fixed_rows_mut::<3>(ROT).copy_from(&w);
        let links = com_kinematics(&m, &s);
        let mut i_tot = Mat3::zeros();
        for l in &links {
            let p = l.p;
            i_tot += l.r_rel * l.inertia * l.r_rel.transpose()
                + l.mass * (Mat3::identity() * p.norm_squared() - p * p.transpose());
        }
        let want = w.cross(&(i_tot * w));
        let got = bias_forces(&m, &s).fixed_rows::<3>(ROT).into_owned();
        assert!((got - want).amax() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn applying_the_bias_as_force_gives_zero_acceleration() {
    let m = MassedParams::default();
    let s = random_body(&mut rng(7));
    let (vd, _) = massed_accel(&m, &s, &bias_forces(&m, &s)).unwrap();
    assert!(vd.amax() < 1e-9);
}

#[test]
fn free_fall() {
    let m = MassedParams::default();
    let mut r = rng(8);
    let g = Vec3::new(0.0, 0.0, -m.gravity);
    let rest = BodyState::at_rest([0.1, -0.4, 0.3, -0.2], rot_y(0.4));
    let (vd, _) = massed_accel(&m, &rest, &V2::zeros()).unwrap();
    let mut want = V2::zeros();
    want[TRANS + 2] = -m.gravity;
    assert!((vd - want).amax() < 1e-12);
    // Moving: the composite center of mass still falls freely.
    for _ in 0..20 {
        let s = random_body(&mut r);
        let (vd, _) = massed_accel(&m, &s, &V2::zeros()).unwrap();
        let links = com_kinematics(&m, &s);
        let acc = links.iter().fold(Vec3::zeros(), |a, l| a + l.mass * (l.jv * vd + l.a_bias)) / m.total_mass();
        assert!((acc - g).amax() < 1e-9, "{acc}");
    }
}

#[test]
fn rotation_rate_is_r_times_skew_omega() {
    let m = MassedParams::default();
    let mut s = random_body(&mut rng(9));
    s.v.fixed_rows_mut::<3>(ROT).copy_from(&Vec3::z());
    let (_, rd) = massed_accel(&m, &s, &V2::zeros()).unwrap();
    assert!((rd - s.r * skew(&Vec3::z())).amax() < 1e-15);
}

#[test]
fn energy_basics() {
    let m = MassedParams::default();
    let s = BodyState::at_rest([0.1, -0.2, 0.3, 0.0], rot_y(0.2));
    let (t, u) = energies(&m, &s);
    assert_eq!(t, 0.0);
    let mut up = s;
    up.q[6] += 0.25;
    let (_, u2) = energies(&m, &up);
    assert!((u2 - u - m.gravity * 0.25 * m.total_mass()).abs() < 1e-14);
}

#[test]
fn rigid_translation_moves_every_link_alike() {
    let m = MassedParams::default();
    let mut s = BodyState::at_rest([0.3, -0.1, -0.2, 0.4], rot_y(0.7));
    s.v[TRANS] = 1.5;
    s.v[TRANS + 2] = -0.5;
    for l in com_kinematics(&m, &s) {
        assert!((l.xd - s.velocity()).amax() < 1e-15);
    }
}

/// Mirror across the body x-z plane: wings swap, translation flips y, the
/// pseudo-vector angular velocity keeps only its y component's sign.
fn mirror_state(s: &BodyState) -> BodyState {
    let sm = mirror_matrix();
    let mut n = *s;
    n.q[0] = s.q[2];
    n.q[1] = s.q[3];
    n.q[2] = s.q[0];
    n.q[3] = s.q[1];
    n.q.fixed_rows_mut::<3>(4).copy_from(&(sm * s.position()));
    n.v = mirror_generalized(&s.v);
    n.r = sm * s.r * sm;
    n
}

fn mirror_generalized(v: &V2) -> V2 {
    let sm = mirror_matrix();
    let mut n = *v;
    n[0] = v[2];
    n[1] = v[3];
    n[2] = v[0];
    n[3] = v[1];
    n.fixed_rows_mut::<3>(TRANS).copy_from(&(sm * v.fixed_rows::<3>(TRANS)));
    n.fixed_rows_mut::<3>(ROT).copy_from(&(-(sm * v.fixed_rows::<3>(ROT))));
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mirrored_state_and_force_give_mirrored_acceleration(seed in 0u64..10_000, f in prop::array::uniform10(-0.2f64..0.2)) {
        let m = MassedParams::default();
        let s = random_body(&mut rng(seed));
        let force = V2::from_column_slice(&f);
        let (a, _) = massed_accel(&m, &s, &force).unwrap();
        let (b, _) = massed_accel(&m, &mirror_state(&s), &mirror_generalized(&force)).unwrap();
        prop_assert!((mirror_generalized(&a) - b).amax() <= 1e-9 * (1.0 + a.amax()));
    }

    #[test]
    fn kinetic_energy_is_nonnegative_quadratic(seed in 0u64..10_000, k in -4.0f64..4.0) {
        let m = MassedParams::default();
        let s = random_body(&mut rng(seed));
        let mut t2 = s;
        t2.v *= k;
        let (t, _) = energies(&m, &s);
        let (tk, _) = energies(&m, &t2);
        prop_assert!(t >= 0.0);
        prop_assert!((tk - k * k * t).abs() <= 1e-12 * (1.0 + tk));
    }

    #[test]
    fn mass_matrix_is_symmetric_everywhere(seed in 0u64..10_000) {
        let m = MassedParams::default();
        let mm = mass_matrix(&m, &random_body(&mut rng(seed)));
        prop_assert!((mm - mm.transpose()).amax() <= 1e-12);
        prop_assert!(mm.cholesky().is_some());
    }
}
