//! Model constants. Every length is in meters, every angle in radians and
//! every rate in SI units; unit conversion happens only at the config boundary.

use crate::error::{Error, Result};
use crate::math::{Mat3, Vec2, Vec3};
use core::f64::consts::PI;
use nalgebra::Cholesky;

/// Index of each variable-length link inside FDC 4-vectors.
pub const FDC_NAMES: [&str; 4] = ["l3b", "l3c", "l8b", "l10b"];

/// Planar geometry of the massless linkage, expressed in body-frame (y, z).
///
/// Three closed loops are formed:
/// * joint 3: crank 1 at `anchor_1` and coupler 2 meet the inner arm
///   (`l3a + l3b`) of the shoulder-train rocker pivoting at `anchor_4`;
/// * joint 11: crank 9 at `anchor_9` and coupler 10 (`l10a + l10b`) meet
///   the elbow rocker pivoting at `anchor_12`;
/// * joint 15: the outer arm `l3c` of the rocker at joint 4 drives coupler 8
///   (`l8a + l8b`) into the shoulder rocker pivoting at `anchor_14`.
///
/// The shoulder guide end effector `p5` rides on the rocker at joint 14 and
/// the elbow guide `p16` on the rocker at joint 12.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageGeometry {
    pub anchor_1: Vec2,
    pub anchor_4: Vec2,
    pub anchor_9: Vec2,
    pub anchor_12: Vec2,
    pub anchor_14: Vec2,
    pub l1: f64,
    pub l2: f64,
    pub l3a: f64,
    pub l8a: f64,
    pub l9: f64,
    pub l10a: f64,
    pub l12a: f64,
    pub l14: f64,
    /// `p5` in the local frame of the rocker at joint 14.
    pub shoulder_guide: Vec2,
    /// `p16` in the local frame of the rocker at joint 12.
    pub elbow_guide: Vec2,
    /// Crank phase difference, `theta1 - theta9`.
    pub phase: f64,
    /// Nominal FDC lengths `[l3b, l3c, l8b, l10b]`.
    pub fdc_nominal: [f64; 4],
    /// Free coordinates `[theta2, theta4, theta9, theta10, theta12, theta13,
    /// theta14]` near the working assembly mode at `theta1 = 0`.
    pub assembly_guess: [f64; 7],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inertial {
    pub mass: f64,
    /// Inertia about the center of mass, in the link frame.
    pub inertia: Mat3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassedParams {
    pub gravity: f64,
    pub body: Inertial,
    pub humerus: Inertial,
    pub radius: Inertial,
    pub humerus_length: f64,
    pub radius_length: f64,
    /// Shoulder mount offset angle `alpha`.
    pub shoulder_offset: f64,
    /// Riser length `l5b`.
    pub riser_length: f64,
    /// Left shoulder joint 7 in the body frame.
    pub shoulder: Vec3,
    /// Torsional stiffness of joints 7 and 8 (`[shoulder, elbow]`).
    pub joint_stiffness: [f64; 2],
    pub joint_damping: [f64; 2],
    /// Rest angles `[theta_s0, theta_e0]`.
    pub joint_rest: [f64; 2],
    pub guide_stiffness: f64,
    pub guide_damping: f64,
    /// Rest lengths `l4` (joint 5 to 6) and `l11` (joint 16 to 17).
    pub guide_rest: [f64; 2],
    /// Distance of joint 6 from the shoulder along the humerus.
    pub humerus_guide_distance: f64,
    /// Distance of joint 17 from the elbow along the radius.
    pub radius_guide_distance: f64,
}

impl MassedParams {
    /// Humerus vector `l_H` in the humerus frame.
    pub fn humerus_vector(&self) -> Vec3 {
        let a = self.shoulder_offset;
        Vec3::new(
            0.0,
            self.humerus_length * a.cos_f(),
            self.riser_length + self.humerus_length * a.sin_f(),
        )
    }

    /// Radius vector `l_R` in the radius frame.
    pub fn radius_vector(&self) -> Vec3 {
        Vec3::new(0.0, self.radius_length, 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.body.mass + 2.0 * (self.humerus.mass + self.radius.mass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeroParams {
    pub enabled: bool,
    pub density: f64,
    pub chord: f64,
    pub span_humerus: f64,
    pub span_radius: f64,
    /// True wind velocity in the inertial frame.
    pub wind: Vec3,
    pub span_segments: usize,
    pub chord_segments: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlParams {
    pub kd1: f64,
    pub kp2: [f64; 4],
    pub kd2: [f64; 4],
    pub kc: [f64; 4],
    /// Flapping reference in rad/s.
    pub omega_ref: f64,
    pub pitch_ref: f64,
    /// Zero-path FDC reference used by the pitch loop.
    pub l_ref_zp: [f64; 4],
    /// Explicit FDC bounds; `None` means `[0.8, 1.2] * l0`.
    pub fdc_bounds: Option<([f64; 4], [f64; 4])>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orthonormalization {
    EveryStep,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumSign {
    /// Orbital term subtracted, as used by the gait metric.
    Verbatim,
    /// Conventional `r x m v` orbital term.
    Conventional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub dt: f64,
    pub t_end: f64,
    pub projection_tol: f64,
    pub orthonormalization: Orthonormalization,
    pub decimation: usize,
    pub momentum_sign: MomentumSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimParams {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub gait_horizon: f64,
    pub pitch_horizon: f64,
    pub max_evals: usize,
    pub seed: u64,
    /// Initial simplex edge in box-normalized units.
    pub initial_step: f64,
    /// Simplex diameter tolerance in box-normalized units.
    pub tolerance: f64,
    pub pitch_bounds: (f64, f64),
    pub kc_bounds: (f64, f64),
    pub restarts: usize,
    pub initial_pitch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub linkage: LinkageGeometry,
    pub massed: MassedParams,
    pub aero: AeroParams,
    pub control: ControlParams,
    pub sim: SimParams,
    pub optim: OptimParams,
}

// `f64::cos` is not available without std; route through num-traits.
trait TrigExt {
    fn cos_f(self) -> f64;
    fn sin_f(self) -> f64;
}

impl TrigExt for f64 {
    fn cos_f(self) -> f64 {
        num_traits::Float::cos(self)
    }
    fn sin_f(self) -> f64 {
        num_traits::Float::sin(self)
    }
}

impl Default for LinkageGeometry {
    fn default() -> Self {
        Self {
            anchor_1: Vec2::new(-0.010, -0.008),
            anchor_4: Vec2::new(-0.0036, 0.0013),
            anchor_9: Vec2::new(0.0173, 0.0309),
            anchor_12: Vec2::new(0.020, 0.0),
            anchor_14: Vec2::new(0.020, 0.0),
            l1: 0.0025,
            l2: 0.0125,
            l3a: 0.002,
            l8a: 0.006,
            l9: 0.0025,
            l10a: 0.02402,
            l12a: 0.006,
            l14: 0.0085,
            shoulder_guide: Vec2::new(-0.002427, -0.021404),
            elbow_guide: Vec2::new(0.132543, -0.017064),
            phase: 0.0,
            fdc_nominal: [0.008, 0.0133, 0.006, 0.007],
            assembly_guess: [2.0675, -0.1698, 0.0, -1.3703, 0.0837, 0.8531, 1.8816],
        }
    }
}

impl Default for MassedParams {
    fn default() -> Self {
        let diag = |x: f64, y: f64, z: f64| Mat3::from_diagonal(&Vec3::new(x, y, z));
        Self {
            gravity: 9.81,
            body: Inertial {
                mass: 0.030,
                inertia: diag(2.4e-5, 1.2e-4, 1.2e-4),
            },
            humerus: Inertial {
                mass: 0.003,
                inertia: diag(2.7e-6, 1.0e-5, 1.27e-5),
            },
            radius: Inertial {
                mass: 0.002,
                inertia: diag(3.3e-6, 6.7e-6, 1.0e-5),
            },
            humerus_length: 0.10,
            radius_length: 0.14,
            shoulder_offset: 0.3,
            riser_length: 0.01,
            shoulder: Vec3::new(-0.10, 0.020, 0.0),
            joint_stiffness: [0.005, 0.002],
            joint_damping: [2.0e-5, 1.0e-5],
            joint_rest: [-0.0925, -0.2075],
            guide_stiffness: 500.0,
            guide_damping: 0.5,
            guide_rest: [0.008, 0.008],
            humerus_guide_distance: 0.02,
            radius_guide_distance: 0.03,
        }
    }
}

impl Default for AeroParams {
    fn default() -> Self {
        Self {
            enabled: true,
            density: 1.225,
            chord: 0.20,
            span_humerus: 0.10,
            span_radius: 0.14,
            wind: Vec3::new(-2.0, 0.0, 0.0),
            span_segments: 20,
            chord_segments: 10,
        }
    }
}

impl Default for ControlParams {
    fn default() -> Self {
        Self {
            kd1: 50.0,
            kp2: [400.0; 4],
            kd2: [50.0; 4],
            kc: [0.0; 4],
            omega_ref: 2.0 * PI * 10.0,
            pitch_ref: 33.0 * PI / 180.0,
            l_ref_zp: LinkageGeometry::default().fdc_nominal,
            fdc_bounds: None,
        }
    }
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 2.0e-4,
            t_end: 1.0,
            projection_tol: 1.0e-12,
            orthonormalization: Orthonormalization::EveryStep,
            decimation: 1,
            momentum_sign: MomentumSign::Verbatim,
        }
    }
}

impl Default for OptimParams {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 10.0,
            gait_horizon: 1.0,
            pitch_horizon: 2.0,
            max_evals: 400,
            seed: 0,
            initial_step: 0.1,
            tolerance: 1.0e-4,
            pitch_bounds: (0.0, PI / 3.0),
            kc_bounds: (-1.0, 1.0),
            restarts: 0,
            initial_pitch: 33.0 * PI / 180.0,
        }
    }
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            linkage: LinkageGeometry::default(),
            massed: MassedParams::default(),
            aero: AeroParams::default(),
            control: ControlParams::default(),
            sim: SimParams::default(),
            optim: OptimParams::default(),
        }
    }
}

fn ensure(cond: bool, field: &'static str, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Validation { field, reason })
    }
}

fn positive(x: f64, field: &'static str) -> Result<()> {
    ensure(x.is_finite() && x > 0.0, field, "must be finite and > 0")
}

fn nonnegative(x: f64, field: &'static str) -> Result<()> {
    ensure(x.is_finite() && x >= 0.0, field, "must be finite and >= 0")
}

fn finite(x: f64, field: &'static str) -> Result<()> {
    ensure(x.is_finite(), field, "must be finite")
}

fn check_inertial(b: &Inertial, mass: &'static str, inertia: &'static str) -> Result<()> {
    positive(b.mass, mass)?;
    ensure(
        b.inertia.iter().all(|x| x.is_finite()),
        inertia,
        "must be finite",
    )?;
    ensure(
        (b.inertia - b.inertia.transpose()).abs().max() <= 1e-12 * b.inertia.abs().max(),
        inertia,
        "must be symmetric",
    )?;
    ensure(
        Cholesky::new(b.inertia).is_some(),
        inertia,
        "must be positive definite",
    )
}

impl LinkageGeometry {
    pub fn validate(&self) -> Result<()> {
        for (v, f) in [
            (self.l1, "linkage.l1"),
            (self.l2, "linkage.l2"),
            (self.l3a, "linkage.l3a"),
            (self.l8a, "linkage.l8a"),
            (self.l9, "linkage.l9"),
            (self.l10a, "linkage.l10a"),
            (self.l12a, "linkage.l12a"),
            (self.l14, "linkage.l14"),
        ] {
            positive(v, f)?;
        }
        for l in self.fdc_nominal {
            positive(l, "linkage.fdc_nominal")?;
        }
        for p in [
            &self.anchor_1,
            &self.anchor_4,
            &self.anchor_9,
            &self.anchor_12,
            &self.anchor_14,
            &self.shoulder_guide,
            &self.elbow_guide,
        ] {
            ensure(
                p.iter().all(|x| x.is_finite()),
                "linkage.anchor",
                "must be finite",
            )?;
        }
        finite(self.phase, "linkage.phase")?;
        ensure(
            self.assembly_guess.iter().all(|x| x.is_finite()),
            "linkage.assembly_guess",
            "must be finite",
        )
    }
}

impl MassedParams {
    pub fn validate(&self) -> Result<()> {
        nonnegative(self.gravity, "massed.gravity")?;
        check_inertial(&self.body, "massed.body_mass", "massed.body_inertia")?;
        check_inertial(&self.humerus, "massed.humerus_mass", "massed.humerus_inertia")?;
        check_inertial(&self.radius, "massed.radius_mass", "massed.radius_inertia")?;
        positive(self.humerus_length, "massed.humerus_length")?;
        positive(self.radius_length, "massed.radius_length")?;
        positive(self.riser_length, "massed.riser_length")?;
        finite(self.shoulder_offset, "massed.shoulder_offset")?;
        ensure(
            self.shoulder.iter().all(|x| x.is_finite()),
            "massed.shoulder",
            "must be finite",
        )?;
        for k in self.joint_stiffness {
            nonnegative(k, "massed.joint_stiffness")?;
        }
        for b in self.joint_damping {
            nonnegative(b, "massed.joint_damping")?;
        }
        for a in self.joint_rest {
            finite(a, "massed.joint_rest")?;
        }
        nonnegative(self.guide_stiffness, "massed.guide_stiffness")?;
        nonnegative(self.guide_damping, "massed.guide_damping")?;
        for l in self.guide_rest {
            nonnegative(l, "massed.guide_rest")?;
        }
        positive(self.humerus_guide_distance, "massed.humerus_guide_distance")?;
        positive(self.radius_guide_distance, "massed.radius_guide_distance")
    }
}

impl AeroParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.density, "aero.density")?;
        positive(self.chord, "aero.chord")?;
        positive(self.span_humerus, "aero.span_humerus")?;
        positive(self.span_radius, "aero.span_radius")?;
        ensure(
            self.wind.iter().all(|x| x.is_finite()),
            "aero.wind",
            "must be finite",
        )?;
        ensure(self.span_segments >= 1, "aero.span_segments", "must be >= 1")?;
        ensure(self.chord_segments >= 1, "aero.chord_segments", "must be >= 1")
    }
}

impl ControlParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.kd1, "control.kd1")?;
        for k in self.kp2 {
            nonnegative(k, "control.kp2")?;
        }
        for k in self.kd2 {
            nonnegative(k, "control.kd2")?;
        }
        for k in self.kc {
            finite(k, "control.kc")?;
        }
        positive(self.omega_ref, "control.omega_ref")?;
        finite(self.pitch_ref, "control.pitch_ref")?;
        for l in self.l_ref_zp {
            positive(l, "control.l_ref_zp")?;
        }
        if let Some((lo, hi)) = &self.fdc_bounds {
            for i in 0..4 {
                positive(lo[i], "control.fdc_min")?;
                ensure(hi[i].is_finite() && lo[i] <= hi[i], "control.fdc_max", "must be >= fdc_min")?;
            }
        }
        Ok(())
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        positive(self.dt, "sim.dt")?;
        ensure(self.t_end.is_finite() && self.t_end >= self.dt, "sim.t_end", "must be >= dt")?;
        positive(self.projection_tol, "sim.projection_tol")?;
        ensure(self.decimation >= 1, "sim.decimation", "must be >= 1")
    }
}

impl OptimParams {
    pub fn validate(&self) -> Result<()> {
        nonnegative(self.w1, "optim.w1")?;
        nonnegative(self.w2, "optim.w2")?;
        nonnegative(self.w3, "optim.w3")?;
        ensure(
            self.w1 + self.w2 + self.w3 > 0.0,
            "optim.weights",
            "must not all be zero",
        )?;
        positive(self.gait_horizon, "optim.gait_horizon")?;
        positive(self.pitch_horizon, "optim.pitch_horizon")?;
        ensure(self.max_evals >= 1, "optim.max_evals", "must be >= 1")?;
        positive(self.initial_step, "optim.initial_step")?;
        positive(self.tolerance, "optim.tolerance")?;
        let (lo, hi) = self.pitch_bounds;
        ensure(lo.is_finite() && hi.is_finite() && lo <= hi, "optim.pitch_bounds", "must be finite and ordered")?;
        let (lo, hi) = self.kc_bounds;
        ensure(lo.is_finite() && hi.is_finite() && lo <= hi, "optim.kc_bounds", "must be finite and ordered")?;
        finite(self.initial_pitch, "optim.initial_pitch")
    }
}

impl RobotParams {
    /// Checks every field invariant. Assembly of the linkage is checked
    /// separately by [`RobotParams::check_assembly`].
    pub fn validate(&self) -> Result<()> {
        self.linkage.validate()?;
        self.massed.validate()?;
        self.aero.validate()?;
        self.control.validate()?;
        self.sim.validate()?;
        self.optim.validate()?;
        let (lo, hi) = self.fdc_bounds();
        for i in 0..4 {
            let l0 = self.linkage.fdc_nominal[i];
            ensure(
                lo[i] > 0.0 && lo[i] <= l0 && l0 <= hi[i],
                "control.fdc_bounds",
                "must satisfy 0 < l_min <= l0 <= l_max",
            )?;
        }
        Ok(())
    }

    /// Solves the linkage at `theta1 = 0` with nominal FDC lengths.
    pub fn check_assembly(&self) -> Result<()> {
        crate::linkage::assemble(
            &self.linkage,
            0.0,
            &self.linkage.fdc_nominal,
            &crate::linkage::initial_guess(&self.linkage, 0.0, &self.linkage.fdc_nominal),
        )
        .map(|_| ())
    }

    /// FDC bounds `(l_min, l_max)`: the configured override, or `0.8 l0` and
    /// `1.2 l0`.
    pub fn fdc_bounds(&self) -> ([f64; 4], [f64; 4]) {
        fdc_bounds(&self.linkage, &self.control)
    }
}

pub fn fdc_bounds(linkage: &LinkageGeometry, control: &ControlParams) -> ([f64; 4], [f64; 4]) {
    if let Some(b) = control.fdc_bounds {
        return b;
    }
    let l0 = linkage.fdc_nominal;
    (l0.map(|l| 0.8 * l), l0.map(|l| 1.2 * l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_assemble() {
        let p = RobotParams::default();
        p.validate().unwrap();
        p.check_assembly().unwrap();
        assert!((p.control.omega_ref - 2.0 * PI * 10.0).abs() < 1e-12);
    }

    #[test]
    fn negative_body_mass_is_rejected() {
        let mut p = RobotParams::default();
        p.massed.body.mass = -1.0;
        assert_eq!(
            p.validate(),
            Err(Error::Validation {
                field: "massed.body_mass",
                reason: "must be finite and > 0"
            })
        );
    }

    #[test]
    fn default_bounds_are_twenty_percent() {
        let mut p = RobotParams::default();
        p.linkage.fdc_nominal = [0.010; 4];
        p.control.l_ref_zp = [0.010; 4];
        let (lo, hi) = p.fdc_bounds();
        for i in 0..4 {
            assert!((lo[i] - 0.008).abs() < 1e-15);
            assert!((hi[i] - 0.012).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_override_is_passed_through() {
        let mut p = RobotParams::default();
        let l0 = p.linkage.fdc_nominal;
        let b = (l0.map(|l| 0.9 * l), l0.map(|l| 1.1 * l));
        p.control.fdc_bounds = Some(b);
        assert_eq!(p.fdc_bounds(), b);
    }

    #[test]
    fn zero_fdc_is_rejected() {
        let mut p = RobotParams::default();
        p.linkage.fdc_nominal = [0.0; 4];
        assert!(matches!(p.validate(), Err(Error::Validation { .. })));
    }

    #[test]
    fn asymmetric_inertia_is_rejected() {
        let mut p = RobotParams::default();
        p.massed.radius.inertia[(0, 1)] = 1e-6;
        assert!(matches!(
            p.validate(),
            Err(Error::Validation { field: "massed.radius_inertia", .. })
        ));
    }
}
