//! CSV and JSON artifacts. Numbers are written with Rust's shortest
//! round-trip formatting, so identical runs give identical bytes.

use aerobat_core::aero::{generalized_aero_force_with, StripKind};
use aerobat_core::body::{Segment, Wing};
use aerobat_core::linkage::SweepPath;
use aerobat_core::sim::{Sample, SystemState, Trajectory};
use aerobat_core::RobotParams;
use serde::Serialize;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Trajectory columns. Rotation entries are row-major `r<row><col>`; all
/// vectors are inertial except `wx..wz` (body frame).
pub const TRAJECTORY_COLUMNS: [&str; 35] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "r11", "r12", "r13", "r21", "r22", "r23", "r31", "r32", "r33", "wx", "wy",
    "wz", "theta_s_l", "theta_e_l", "theta_s_r", "theta_e_r", "theta1", "l3b", "l3c", "l8b", "l10b", "pi_x", "pi_y",
    "pi_z", "theta_y", "lift", "thrust", "constraint_norm",
];

pub const SENSITIVITY_COLUMNS: [&str; 9] = ["fdc1", "fdc2", "fdc3", "fdc4", "theta1", "p5_y", "p5_z", "p16_y", "p16_z"];

pub const STRIP_COLUMNS: [&str; 17] = [
    "t", "wing", "segment", "kind", "x_hat", "area", "px", "py", "pz", "beta_deg", "v_r", "lift_x", "lift_y", "lift_z",
    "drag_x", "drag_y", "drag_z",
];

#[derive(Debug)]
pub enum ExportError {
    Io(io::Error),
    Csv(String),
    Json(String),
    MissingColumn(String),
}

impl fmt::Display for ExportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExportError::Io(e) => write!(f, "{e}"),
            ExportError::Csv(m) => write!(f, "csv: {m}"),
            ExportError::Json(m) => write!(f, "json: {m}"),
            ExportError::MissingColumn(c) => write!(f, "missing channel `{c}`"),
        }
    }
}

impl std::error::Error for ExportError {}

impl From<io::Error> for ExportError {
    fn from(e: io::Error) -> Self {
        ExportError::Io(e)
    }
}

impl From<csv::Error> for ExportError {
    fn from(e: csv::Error) -> Self {
        ExportError::Csv(e.to_string())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn trajectory_row(s: &Sample) -> [f64; 35] {
    let r = &s.rotation;
    [
        s.t,
        s.position.x,
        s.position.y,
        s.position.z,
        s.velocity.x,
        s.velocity.y,
        s.velocity.z,
        r[(0, 0)],
        r[(0, 1)],
        r[(0, 2)],
        r[(1, 0)],
        r[(1, 1)],
        r[(1, 2)],
        r[(2, 0)],
        r[(2, 1)],
        r[(2, 2)],
        s.omega.x,
        s.omega.y,
        s.omega.z,
        s.joints[0],
        s.joints[1],
        s.joints[2],
        s.joints[3],
        s.theta1,
        s.fdc[0],
        s.fdc[1],
        s.fdc[2],
        s.fdc[3],
        s.momentum.x,
        s.momentum.y,
        s.momentum.z,
        s.pitch,
        s.lift,
        s.thrust,
        s.drift,
    ]
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, ExportError> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_COLUMNS)?;
    for s in &traj.samples {
        w.write_record(trajectory_row(s).map(num))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per crank sample of every sweep path that assembled.
pub fn write_sensitivity(path: &Path, paths: &[SweepPath]) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(SENSITIVITY_COLUMNS)?;
    for p in paths {
        let Ok(samples) = &p.samples else { continue };
        for s in samples {
            let row = [p.fdc[0], p.fdc[1], p.fdc[2], p.fdc[3], s.theta1, s.p5.x, s.p5.y, s.p16.x, s.p16.y];
            w.write_record(row.map(num))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn wing_name(w: Wing) -> &'static str {
    match w {
        Wing::Left => "left",
        Wing::Right => "right",
    }
}

fn segment_name(s: Segment) -> &'static str {
    match s {
        Segment::Humerus => "humerus",
        Segment::Radius => "radius",
    }
}

fn kind_name(k: StripKind) -> &'static str {
    match k {
        StripKind::Spanwise => "spanwise",
        StripKind::Chordwise => "chordwise",
    }
}

/// Per-strip aerodynamic state at `s`. Points and forces are body-frame.
pub fn write_strips(path: &Path, p: &RobotParams, s: &SystemState) -> Result<(), ExportError> {
    let mut w = writer(path)?;
    w.write_record(STRIP_COLUMNS)?;
    let mut rows = Vec::new();
    generalized_aero_force_with(&p.massed, &p.aero, &s.body, |r| {
        let mut row = vec![num(s.t), wing_name(r.wing).into(), segment_name(r.segment).into(), kind_name(r.kind).into()];
        row.extend(
            [
                r.x_hat, r.area, r.point.x, r.point.y, r.point.z, r.beta_deg, r.v_r, r.lift.x, r.lift.y, r.lift.z,
                r.drag.x, r.drag.y, r.drag.z,
            ]
            .map(num),
        );
        rows.push(row);
    });
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Numeric CSV loaded column-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<&[f64], ExportError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| ExportError::MissingColumn(name.to_string()))
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

pub fn read_table(path: &Path) -> Result<Table, ExportError> {
    let mut r = csv::Reader::from_path(path)?;
    let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            let v = field
                .trim()
                .parse::<f64>()
                .map_err(|_| ExportError::Csv(format!("row {}: `{field}` in column `{}` is not a number", line + 2, names[i])))?;
            columns[i].push(v);
        }
    }
    Ok(Table { names, columns })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value).map_err(|e| ExportError::Json(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}
