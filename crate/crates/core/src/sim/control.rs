//! Crank and FDC PD laws and the pitch outer loop.

use crate::params::ControlParams;

/// Crank acceleration `K_d1 (omega_ref - thetadot1)`.
#[inline]
pub fn crank_controller(theta1_dot: f64, omega_ref: f64, kd1: f64) -> f64 {
    kd1 * (omega_ref - theta1_dot)
}

/// FDC length accelerations `K_p2 (l_ref - l) - K_d2 ldot`.
pub fn fdc_controller(l: &[f64; 4], l_dot: &[f64; 4], l_ref: &[f64; 4], kp2: &[f64; 4], kd2: &[f64; 4]) -> [f64; 4] {
    core::array::from_fn(|i| kp2[i] * (l_ref[i] - l[i]) - kd2[i] * l_dot[i])
}

pub fn saturate(l: &[f64; 4], lo: &[f64; 4], hi: &[f64; 4]) -> [f64; 4] {
    core::array::from_fn(|i| l[i].clamp(lo[i], hi[i]))
}

/// `l_ref = sat(l_ref_zp + K_c (theta_ref - theta_y))`.
pub fn pitch_outer_loop(pitch: f64, c: &ControlParams, bounds: &([f64; 4], [f64; 4])) -> [f64; 4] {
    let e = c.pitch_ref - pitch;
    let raw = core::array::from_fn(|i| c.l_ref_zp[i] + c.kc[i] * e);
    saturate(&raw, &bounds.0, &bounds.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn crank_law() {
        assert_eq!(crank_controller(3.0, 3.0, 5.0), 0.0);
        assert!((crank_controller(0.0, 2.0 * PI * 10.0, 1.0) - 62.83).abs() < 5e-3);
        assert!(crank_controller(70.0, 2.0 * PI * 10.0, 1.0) < 0.0);
    }

    #[test]
    fn fdc_law_is_proportional_to_step() {
        let u = fdc_controller(&[1.0; 4], &[0.0; 4], &[1.0; 4], &[400.0; 4], &[50.0; 4]);
        assert_eq!(u, [0.0; 4]);
        let u = fdc_controller(&[1.0; 4], &[0.0; 4], &[1.5, 1.0, 1.0, 0.5], &[400.0; 4], &[50.0; 4]);
        assert_eq!(u, [200.0, 0.0, 0.0, -200.0]);
    }

    #[test]
    fn outer_loop_tracks_and_saturates() {
        let mut c = ControlParams::default();
        c.l_ref_zp = [1.0; 4];
        c.kc = [0.42, -0.26, -0.38, -0.097];
        c.pitch_ref = 0.5;
        let wide = ([-10.0; 4], [10.0; 4]);
        assert_eq!(pitch_outer_loop(0.5, &c, &wide), [1.0; 4]);
        let l = pitch_outer_loop(0.4, &c, &wide);
        let want = [1.042, 0.974, 0.962, 0.9903];
        for i in 0..4 {
            assert!((l[i] - want[i]).abs() < 1e-12);
        }
        let tight = ([0.99; 4], [1.01; 4]);
        assert_eq!(pitch_outer_loop(-5.0, &c, &tight), [1.01, 0.99, 0.99, 0.99]);
    }
}
