//! Static SVG line charts. Output depends only on the input numbers, so
//! identical data gives identical files.

use crate::export::{ExportError, Table};
use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
/// Polylines are thinned to at most this many vertices.
const MAX_POINTS: usize = 4000;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line and its legend text.
    pub reference: Option<(f64, String)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Step of the form {1, 2, 5} x 10^k giving roughly `target` intervals.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn decimals(step: f64) -> usize {
    (-step.log10().floor()).max(0.0) as usize
}

fn ticks(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| Some(acc.map_or((v, v), |(a, b): (f64, f64)| (a.min(v), b.max(v)))))
}

pub fn render(chart: &Chart) -> String {
    let (x0, x1) = finite_range(chart.series.iter().flat_map(|s| s.x.iter().copied())).unwrap_or((0.0, 1.0));
    let reference = chart.reference.as_ref().map(|r| r.0);
    let (mut y0, mut y1) =
        finite_range(chart.series.iter().flat_map(|s| s.y.iter().copied()).chain(reference)).unwrap_or((0.0, 1.0));
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    if y1 - y0 < 1e-12 * (1.0 + y0.abs()) {
        y0 -= 0.5 * (1.0 + y0.abs() * 1e-3);
        y1 += 0.5 * (1.0 + y1.abs() * 1e-3);
    }
    let ystep = nice_step(y1 - y0, 6.0);
    let (y0, y1) = ((y0 / ystep).floor() * ystep, (y1 / ystep).ceil() * ystep);
    let xstep = nice_step(x1 - x0, 8.0);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut o = String::new();
    let _ = writeln!(
        o,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(o, "<desc>x range {x0} .. {x1}</desc>");
    let _ = writeln!(o, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&chart.title)
    );

    // Grid and tick labels.
    let xd = decimals(xstep);
    for t in ticks(x0, x1, xstep) {
        let x = sx(t);
        let _ = writeln!(o, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/>"##, TOP + ph);
        let _ = writeln!(o, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"#, TOP + ph + 18.0);
    }
    let yd = decimals(ystep);
    for t in ticks(y0, y1, ystep) {
        let y = sy(t);
        let _ = writeln!(o, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/>"##, LEFT + pw);
        let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(o, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        o,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 14.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        o,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    );

    let mut legend: Vec<(String, &str, bool)> = Vec::new();
    if let Some((v, label)) = &chart.reference {
        let y = sy(*v);
        let _ = writeln!(
            o,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555555" stroke-dasharray="6 4"/>"##,
            LEFT + pw
        );
        legend.push((label.clone(), "#555555", true));
    }
    for (k, s) in chart.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let stride = s.x.len().div_ceil(MAX_POINTS).max(1);
        let mut pts = String::new();
        let n = s.x.len().min(s.y.len());
        let idx = (0..n).step_by(stride).chain((n > 0 && (n - 1) % stride != 0).then_some(n - 1));
        for i in idx {
            if s.x[i].is_finite() && s.y[i].is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(s.x[i]), sy(s.y[i]));
            }
        }
        let _ = writeln!(
            o,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
        legend.push((s.label.clone(), color, false));
    }
    for (k, (label, color, dashed)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * k as f64;
        let x = LEFT + pw - 150.0;
        let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            o,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            x + 22.0
        );
        let _ = writeln!(o, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, x + 28.0, y + 4.0, escape(label));
    }
    o.push_str("</svg>\n");
    o
}

/// The four standard charts for a trajectory table, as `(file name, svg)`.
/// The pitch chart carries a dashed line at `pitch_ref` when given.
pub fn trajectory_charts(t: &Table, pitch_ref: Option<f64>) -> Result<Vec<(String, String)>, ExportError> {
    let time = t.column("t")?.to_vec();
    let series = |name: &str, label: &str, scale: f64| -> Result<Series, ExportError> {
        Ok(Series {
            label: label.to_string(),
            x: time.clone(),
            y: t.column(name)?.iter().map(|v| v * scale).collect(),
        })
    };
    let deg = 180.0 / std::f64::consts::PI;
    let x_label = "time t [s]".to_string();
    let charts = [
        (
            "pitch.svg",
            Chart {
                title: "Body pitch".into(),
                x_label: x_label.clone(),
                y_label: "pitch θ_y [deg]".into(),
                series: vec![series("theta_y", "θ_y", deg)?],
                reference: pitch_ref.map(|r| (r * deg, format!("θ_ref = {:.1}°", r * deg))),
            },
        ),
        (
            "velocity.svg",
            Chart {
                title: "Body velocity (inertial)".into(),
                x_label: x_label.clone(),
                y_label: "velocity [m/s]".into(),
                series: vec![series("vx", "v_x", 1.0)?, series("vy", "v_y", 1.0)?, series("vz", "v_z", 1.0)?],
                reference: None,
            },
        ),
        (
            "fdc.svg",
            Chart {
                title: "FDC lengths".into(),
                x_label: x_label.clone(),
                y_label: "length [mm]".into(),
                series: vec![
                    series("l3b", "l3b", 1e3)?,
                    series("l3c", "l3c", 1e3)?,
                    series("l8b", "l8b", 1e3)?,
                    series("l10b", "l10b", 1e3)?,
                ],
                reference: None,
            },
        ),
        (
            "aero.svg",
            Chart {
                title: "Aerodynamic lift and thrust".into(),
                x_label,
                y_label: "force [N]".into(),
                series: vec![series("lift", "lift", 1.0)?, series("thrust", "thrust", 1.0)?],
                reference: None,
            },
        ),
    ];
    Ok(charts.into_iter().map(|(n, c)| (n.to_string(), render(&c))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_are_one_two_five() {
        assert_eq!(nice_step(4.0, 8.0), 0.5);
        assert_eq!(nice_step(1.0, 6.0), 0.2);
        assert_eq!(nice_step(90.0, 6.0), 20.0);
        assert_eq!(ticks(0.0, 4.0, 0.5).len(), 9);
    }

    #[test]
    fn constant_series_still_renders() {
        let c = Chart {
            title: "flat".into(),
            x_label: "t [s]".into(),
            y_label: "y [-]".into(),
            series: vec![Series {
                label: "y".into(),
                x: vec![0.0, 1.0],
                y: vec![2.0, 2.0],
            }],
            reference: None,
        };
        let s = render(&c);
        assert!(s.contains("<polyline") && !s.contains("NaN"));
    }
}
