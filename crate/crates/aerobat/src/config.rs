//! Config document: six TOML sections mapping onto [`RobotParams`].
//!
//! Lengths are meters and angles radians everywhere. The one unit conversion
//! is the flapping rate, written in Hz (`flap_frequency`) and stored in rad/s.
//! Missing keys and sections fall back to the shipped defaults.

use aerobat_core::math::{Mat3, Vec2, Vec3};
use aerobat_core::params::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

/// The default config shipped with the tool.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    /// A `--set` argument that is malformed or names no known key.
    Override(String),
    Invalid(aerobat_core::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Override(m) => write!(f, "--set: {m}"),
            ConfigError::Invalid(e) => write!(f, "config validation error: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<aerobat_core::Error> for ConfigError {
    fn from(e: aerobat_core::Error) -> Self {
        ConfigError::Invalid(e)
    }
}

type R<T> = Result<T, ConfigError>;

fn v2(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

fn a2(v: &Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn v3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn a3(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn mat(rows: [[f64; 3]; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| rows[i][j])
}

fn rows(m: &Mat3) -> [[f64; 3]; 3] {
    core::array::from_fn(|i| core::array::from_fn(|j| m[(i, j)]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkageSection {
    pub anchor_1: [f64; 2],
    pub anchor_4: [f64; 2],
    pub anchor_9: [f64; 2],
    pub anchor_12: [f64; 2],
    pub anchor_14: [f64; 2],
    pub l1: f64,
    pub l2: f64,
    pub l3a: f64,
    pub l8a: f64,
    pub l9: f64,
    pub l10a: f64,
    pub l12a: f64,
    pub l14: f64,
    pub shoulder_guide: [f64; 2],
    pub elbow_guide: [f64; 2],
    pub phase: f64,
    pub fdc_nominal: [f64; 4],
    pub assembly_guess: [f64; 7],
}

impl From<&LinkageGeometry> for LinkageSection {
    fn from(g: &LinkageGeometry) -> Self {
        Self {
            anchor_1: a2(&g.anchor_1),
            anchor_4: a2(&g.anchor_4),
            anchor_9: a2(&g.anchor_9),
            anchor_12: a2(&g.anchor_12),
            anchor_14: a2(&g.anchor_14),
            l1: g.l1,
            l2: g.l2,
            l3a: g.l3a,
            l8a: g.l8a,
            l9: g.l9,
            l10a: g.l10a,
            l12a: g.l12a,
            l14: g.l14,
            shoulder_guide: a2(&g.shoulder_guide),
            elbow_guide: a2(&g.elbow_guide),
            phase: g.phase,
            fdc_nominal: g.fdc_nominal,
            assembly_guess: g.assembly_guess,
        }
    }
}

impl Default for LinkageSection {
    fn default() -> Self {
        (&LinkageGeometry::default()).into()
    }
}

impl LinkageSection {
    fn to_params(&self) -> LinkageGeometry {
        LinkageGeometry {
            anchor_1: v2(self.anchor_1),
            anchor_4: v2(self.anchor_4),
            anchor_9: v2(self.anchor_9),
            anchor_12: v2(self.anchor_12),
            anchor_14: v2(self.anchor_14),
            l1: self.l1,
            l2: self.l2,
            l3a: self.l3a,
            l8a: self.l8a,
            l9: self.l9,
            l10a: self.l10a,
            l12a: self.l12a,
            l14: self.l14,
            shoulder_guide: v2(self.shoulder_guide),
            elbow_guide: v2(self.elbow_guide),
            phase: self.phase,
            fdc_nominal: self.fdc_nominal,
            assembly_guess: self.assembly_guess,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MassedSection {
    pub gravity: f64,
    pub body_mass: f64,
    pub body_inertia: [[f64; 3]; 3],
    pub humerus_mass: f64,
    pub humerus_inertia: [[f64; 3]; 3],
    pub radius_mass: f64,
    pub radius_inertia: [[f64; 3]; 3],
    pub humerus_length: f64,
    pub radius_length: f64,
    pub shoulder_offset: f64,
    pub riser_length: f64,
    pub shoulder: [f64; 3],
    pub joint_stiffness: [f64; 2],
    pub joint_damping: [f64; 2],
    pub joint_rest: [f64; 2],
    pub guide_stiffness: f64,
    pub guide_damping: f64,
    pub guide_rest: [f64; 2],
    pub humerus_guide_distance: f64,
    pub radius_guide_distance: f64,
}

impl From<&MassedParams> for MassedSection {
    fn from(m: &MassedParams) -> Self {
        Self {
            gravity: m.gravity,
            body_mass: m.body.mass,
            body_inertia: rows(&m.body.inertia),
            humerus_mass: m.humerus.mass,
            humerus_inertia: rows(&m.humerus.inertia),
            radius_mass: m.radius.mass,
            radius_inertia: rows(&m.radius.inertia),
            humerus_length: m.humerus_length,
            radius_length: m.radius_length,
            shoulder_offset: m.shoulder_offset,
            riser_length: m.riser_length,
            shoulder: a3(&m.shoulder),
            joint_stiffness: m.joint_stiffness,
            joint_damping: m.joint_damping,
            joint_rest: m.joint_rest,
            guide_stiffness: m.guide_stiffness,
            guide_damping: m.guide_damping,
            guide_rest: m.guide_rest,
            humerus_guide_distance: m.humerus_guide_distance,
            radius_guide_distance: m.radius_guide_distance,
        }
    }
}

impl Default for MassedSection {
    fn default() -> Self {
        (&MassedParams::default()).into()
    }
}

impl MassedSection {
    fn to_params(&self) -> MassedParams {
        MassedParams {
            gravity: self.gravity,
            body: Inertial {
                mass: self.body_mass,
                inertia: mat(self.body_inertia),
            },
            humerus: Inertial {
                mass: self.humerus_mass,
                inertia: mat(self.humerus_inertia),
            },
            radius: Inertial {
                mass: self.radius_mass,
                inertia: mat(self.radius_inertia),
            },
            humerus_length: self.humerus_length,
            radius_length: self.radius_length,
            shoulder_offset: self.shoulder_offset,
            riser_length: self.riser_length,
            shoulder: v3(self.shoulder),
            joint_stiffness: self.joint_stiffness,
            joint_damping: self.joint_damping,
            joint_rest: self.joint_rest,
            guide_stiffness: self.guide_stiffness,
            guide_damping: self.guide_damping,
            guide_rest: self.guide_rest,
            humerus_guide_distance: self.humerus_guide_distance,
            radius_guide_distance: self.radius_guide_distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeroSection {
    pub enabled: bool,
    pub density: f64,
    pub chord: f64,
    pub span_humerus: f64,
    pub span_radius: f64,
    pub wind: [f64; 3],
    pub span_segments: usize,
    pub chord_segments: usize,
}

impl From<&AeroParams> for AeroSection {
    fn from(a: &AeroParams) -> Self {
        Self {
            enabled: a.enabled,
            density: a.density,
            chord: a.chord,
            span_humerus: a.span_humerus,
            span_radius: a.span_radius,
            wind: a3(&a.wind),
            span_segments: a.span_segments,
            chord_segments: a.chord_segments,
        }
    }
}

impl Default for AeroSection {
    fn default() -> Self {
        (&AeroParams::default()).into()
    }
}

impl AeroSection {
    fn to_params(&self) -> AeroParams {
        AeroParams {
            enabled: self.enabled,
            density: self.density,
            chord: self.chord,
            span_humerus: self.span_humerus,
            span_radius: self.span_radius,
            wind: v3(self.wind),
            span_segments: self.span_segments,
            chord_segments: self.chord_segments,
        }
    }
}

/// Control gains. The flapping rate may be given either in Hz
/// (`flap_frequency`) or directly in rad/s (`omega_ref`), not both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSection {
    pub kd1: f64,
    pub kp2: [f64; 4],
    pub kd2: [f64; 4],
    pub kc: [f64; 4],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flap_frequency: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_ref: Option<f64>,
    pub pitch_ref: f64,
    /// Defaults to `linkage.fdc_nominal`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_ref_zp: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fdc_min: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fdc_max: Option<[f64; 4]>,
}

impl From<&ControlParams> for ControlSection {
    fn from(c: &ControlParams) -> Self {
        // Write Hz only when it reproduces the stored rate bit for bit.
        let hz = c.omega_ref / TAU;
        let (flap_frequency, omega_ref) = if TAU * hz == c.omega_ref {
            (Some(hz), None)
        } else {
            (None, Some(c.omega_ref))
        };
        Self {
            kd1: c.kd1,
            kp2: c.kp2,
            kd2: c.kd2,
            kc: c.kc,
            flap_frequency,
            omega_ref,
            pitch_ref: c.pitch_ref,
            l_ref_zp: Some(c.l_ref_zp),
            fdc_min: c.fdc_bounds.map(|b| b.0),
            fdc_max: c.fdc_bounds.map(|b| b.1),
        }
    }
}

// Not derivable: the gains come from the model defaults, only the optional
// spellings start empty.
#[allow(clippy::derivable_impls)]
impl Default for ControlSection {
    fn default() -> Self {
        Self {
            flap_frequency: None,
            omega_ref: None,
            l_ref_zp: None,
            ..(&ControlParams::default()).into()
        }
    }
}

impl ControlSection {
    fn to_params(&self, l0: [f64; 4]) -> R<ControlParams> {
        let omega_ref = match (self.flap_frequency, self.omega_ref) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::Invalid(aerobat_core::Error::Validation {
                    field: "control.flap_frequency",
                    reason: "give either flap_frequency (Hz) or omega_ref (rad/s), not both",
                }))
            }
            (Some(hz), None) => TAU * hz,
            (None, Some(w)) => w,
            (None, None) => ControlParams::default().omega_ref,
        };
        let fdc_bounds = match (self.fdc_min, self.fdc_max) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(ConfigError::Invalid(aerobat_core::Error::Validation {
                    field: "control.fdc_min",
                    reason: "fdc_min and fdc_max must be given together",
                }))
            }
        };
        Ok(ControlParams {
            kd1: self.kd1,
            kp2: self.kp2,
            kd2: self.kd2,
            kc: self.kc,
            omega_ref,
            pitch_ref: self.pitch_ref,
            l_ref_zp: self.l_ref_zp.unwrap_or(l0),
            fdc_bounds,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrthoName {
    EveryStep,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentumName {
    Verbatim,
    Conventional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub dt: f64,
    pub t_end: f64,
    pub projection_tol: f64,
    pub orthonormalization: OrthoName,
    pub decimation: usize,
    pub momentum_sign: MomentumName,
}

impl From<&SimParams> for SimSection {
    fn from(s: &SimParams) -> Self {
        Self {
            dt: s.dt,
            t_end: s.t_end,
            projection_tol: s.projection_tol,
            orthonormalization: match s.orthonormalization {
                Orthonormalization::EveryStep => OrthoName::EveryStep,
                Orthonormalization::Never => OrthoName::Never,
            },
            decimation: s.decimation,
            momentum_sign: match s.momentum_sign {
                MomentumSign::Verbatim => MomentumName::Verbatim,
                MomentumSign::Conventional => MomentumName::Conventional,
            },
        }
    }
}

impl Default for SimSection {
    fn default() -> Self {
        (&SimParams::default()).into()
    }
}

impl SimSection {
    fn to_params(&self) -> SimParams {
        SimParams {
            dt: self.dt,
            t_end: self.t_end,
            projection_tol: self.projection_tol,
            orthonormalization: match self.orthonormalization {
                OrthoName::EveryStep => Orthonormalization::EveryStep,
                OrthoName::Never => Orthonormalization::Never,
            },
            decimation: self.decimation,
            momentum_sign: match self.momentum_sign {
                MomentumName::Verbatim => MomentumSign::Verbatim,
                MomentumName::Conventional => MomentumSign::Conventional,
            },
        }
    }
}

/// TOML integers are signed 64-bit; larger seeds travel as strings.
mod seed_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(i) => u64::try_from(i).map_err(|_| de::Error::custom("seed must be >= 0")),
            Raw::Text(t) => t.parse().map_err(|_| de::Error::custom("seed must be a u64")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimSection {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub gait_horizon: f64,
    pub pitch_horizon: f64,
    pub max_evals: usize,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub initial_step: f64,
    pub tolerance: f64,
    pub pitch_bounds: [f64; 2],
    pub kc_bounds: [f64; 2],
    pub restarts: usize,
    pub initial_pitch: f64,
}

impl From<&OptimParams> for OptimSection {
    fn from(o: &OptimParams) -> Self {
        Self {
            w1: o.w1,
            w2: o.w2,
            w3: o.w3,
            gait_horizon: o.gait_horizon,
            pitch_horizon: o.pitch_horizon,
            max_evals: o.max_evals,
            seed: o.seed,
            initial_step: o.initial_step,
            tolerance: o.tolerance,
            pitch_bounds: [o.pitch_bounds.0, o.pitch_bounds.1],
            kc_bounds: [o.kc_bounds.0, o.kc_bounds.1],
            restarts: o.restarts,
            initial_pitch: o.initial_pitch,
        }
    }
}

impl Default for OptimSection {
    fn default() -> Self {
        (&OptimParams::default()).into()
    }
}

impl OptimSection {
    fn to_params(&self) -> OptimParams {
        OptimParams {
            w1: self.w1,
            w2: self.w2,
            w3: self.w3,
            gait_horizon: self.gait_horizon,
            pitch_horizon: self.pitch_horizon,
            max_evals: self.max_evals,
            seed: self.seed,
            initial_step: self.initial_step,
            tolerance: self.tolerance,
            pitch_bounds: (self.pitch_bounds[0], self.pitch_bounds[1]),
            kc_bounds: (self.kc_bounds[0], self.kc_bounds[1]),
            restarts: self.restarts,
            initial_pitch: self.initial_pitch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigDoc {
    pub linkage: LinkageSection,
    pub massed: MassedSection,
    pub aero: AeroSection,
    pub control: ControlSection,
    pub sim: SimSection,
    pub optim: OptimSection,
}

impl From<&RobotParams> for ConfigDoc {
    fn from(p: &RobotParams) -> Self {
        Self {
            linkage: (&p.linkage).into(),
            massed: (&p.massed).into(),
            aero: (&p.aero).into(),
            control: (&p.control).into(),
            sim: (&p.sim).into(),
            optim: (&p.optim).into(),
        }
    }
}

impl ConfigDoc {
    /// Builds and fully validates the parameters, including assembly.
    pub fn to_params(&self) -> R<RobotParams> {
        let p = RobotParams {
            linkage: self.linkage.to_params(),
            massed: self.massed.to_params(),
            aero: self.aero.to_params(),
            control: self.control.to_params(self.linkage.fdc_nominal)?,
            sim: self.sim.to_params(),
            optim: self.optim.to_params(),
        };
        p.validate()?;
        p.check_assembly()?;
        Ok(p)
    }
}

/// Every `section.key` a config may contain.
pub fn known_keys() -> BTreeSet<String> {
    let mut doc = ConfigDoc::from(&RobotParams::default());
    doc.control.omega_ref = Some(0.0);
    doc.control.fdc_min = Some([0.0; 4]);
    doc.control.fdc_max = Some([0.0; 4]);
    let table = toml::Table::try_from(&doc).expect("config schema serializes");
    let mut keys = BTreeSet::new();
    for (section, body) in &table {
        if let Some(t) = body.as_table() {
            for k in t.keys() {
                keys.insert(format!("{section}.{k}"));
            }
        }
    }
    keys
}

/// Splits `key=value`. The value is read as a TOML literal when possible
/// (`0.1`, `[1, 2]`, `true`) and as a bare string otherwise.
pub fn parse_override(arg: &str) -> R<(String, toml::Value)> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(format!("expected key=value, got `{arg}`")))?;
    let key = key.trim();
    if !known_keys().contains(key) {
        return Err(ConfigError::Override(format!("unknown key `{key}`")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    Ok((key.to_string(), value))
}

fn apply(table: &mut toml::Table, key: &str, value: toml::Value) -> R<()> {
    let (section, field) = key
        .split_once('.')
        .ok_or_else(|| ConfigError::Override(format!("key `{key}` needs a section")))?;
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let t = entry
        .as_table_mut()
        .ok_or_else(|| ConfigError::Parse(format!("`{section}` is not a section")))?;
    // Hz and rad/s spellings of the flapping rate are mutually exclusive.
    match field {
        "flap_frequency" => {
            t.remove("omega_ref");
        }
        "omega_ref" => {
            t.remove("flap_frequency");
        }
        _ => {}
    }
    t.insert(field.to_string(), value);
    Ok(())
}

/// Parses a document, applies overrides in order and validates the result.
pub fn load_str(text: &str, overrides: &[(String, toml::Value)]) -> R<RobotParams> {
    let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    for (k, v) in overrides {
        apply(&mut table, k, v.clone())?;
    }
    let doc: ConfigDoc = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    doc.to_params()
}

pub fn load_file(path: &Path, overrides: &[(String, toml::Value)]) -> R<RobotParams> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    load_str(&text, overrides)
}

/// Canonical document for `p`; loading it gives back `p` exactly.
pub fn to_toml(p: &RobotParams) -> String {
    toml::to_string(&ConfigDoc::from(p)).expect("config serializes")
}

/// SHA-256 of the canonical document.
pub fn config_hash(p: &RobotParams) -> String {
    hex::encode(Sha256::digest(to_toml(p).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_file_is_the_built_in_default() {
        let p = load_str(DEFAULT_CONFIG, &[]).unwrap();
        assert_eq!(p, RobotParams::default());
    }

    #[test]
    fn empty_document_means_defaults() {
        assert_eq!(load_str("", &[]).unwrap(), RobotParams::default());
    }

    #[test]
    fn hertz_become_radians_per_second() {
        let p = load_str("[control]\nflap_frequency = 12.5\n", &[]).unwrap();
        assert_eq!(p.control.omega_ref, TAU * 12.5);
        let q = load_str("[control]\nomega_ref = 70.0\n", &[]).unwrap();
        assert_eq!(q.control.omega_ref, 70.0);
        assert!(load_str("[control]\nomega_ref = 70.0\nflap_frequency = 3.0\n", &[]).is_err());
    }

    #[test]
    fn large_seeds_survive() {
        let mut p = RobotParams::default();
        p.optim.seed = u64::MAX;
        assert_eq!(load_str(&to_toml(&p), &[]).unwrap(), p);
    }

    #[test]
    fn override_values() {
        let (k, v) = parse_override("aero.wind=[-3, 0, 1.5]").unwrap();
        assert_eq!(k, "aero.wind");
        let p = load_str("", &[(k, v)]).unwrap();
        assert_eq!(p.aero.wind, Vec3::new(-3.0, 0.0, 1.5));
        let (k, v) = parse_override("sim.orthonormalization=never").unwrap();
        assert_eq!(load_str("", &[(k, v)]).unwrap().sim.orthonormalization, Orthonormalization::Never);
        assert!(matches!(parse_override("sim.dtt=1"), Err(ConfigError::Override(_))));
        assert!(matches!(parse_override("sim.dt"), Err(ConfigError::Override(_))));
    }
}
