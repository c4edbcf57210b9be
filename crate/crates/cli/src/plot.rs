//! Minimal SVG line charts for a trace file.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::trace_io::TraceRow;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 120.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 36.0;

pub const PLOT_FILES: [&str; 4] = ["pmv.svg", "t_cab.svg", "controls.svg", "powers.svg"];

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("empty trace")]
    Empty,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

struct Series {
    name: &'static str,
    color: &'static str,
    dashed: bool,
    values: Vec<f64>,
}

struct Panel {
    title: &'static str,
    y_label: &'static str,
    series: Vec<Series>,
}

fn series(name: &'static str, color: &'static str, dashed: bool, rows: &[TraceRow], f: impl Fn(&TraceRow) -> f64) -> Series {
    Series {
        name,
        color,
        dashed,
        values: rows.iter().map(f).collect(),
    }
}

/// Round-number tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn draw_panel(out: &mut String, panel: &Panel, t: &[f64], y0: f64) {
    let (t_lo, mut t_hi) = (t[0], t[t.len() - 1]);
    if t_hi <= t_lo {
        t_hi = t_lo + 1.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in panel.series.iter().flat_map(|s| &s.values).filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    lo -= pad;
    hi += pad;

    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let top = y0 + MARGIN_TOP;
    let bottom = y0 + PANEL_HEIGHT - MARGIN_BOTTOM;
    let px = |x: f64| left + (x - t_lo) / (t_hi - t_lo) * (right - left);
    let py = |y: f64| bottom - (y - lo) / (hi - lo) * (bottom - top);

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" font-weight="bold">{}</text>"#,
        left,
        y0 + 18.0,
        panel.title
    );
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    for v in ticks(lo, hi) {
        let y = py(v);
        let _ = writeln!(
            out,
            r##"<line x1="{left:.1}" y1="{y:.1}" x2="{right:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
            left - 4.0,
            y + 3.0,
            fmt_tick(v)
        );
    }
    for v in ticks(t_lo, t_hi) {
        let x = px(v);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.1}" y1="{top:.1}" x2="{x:.1}" y2="{bottom:.1}" stroke="#eee"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
            bottom + 14.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">time [s]</text>"#,
        (left + right) / 2.0,
        bottom + 30.0
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" font-size="11" text-anchor="middle">{}</text>"#,
        16.0,
        (top + bottom) / 2.0,
        panel.y_label
    );

    for (i, s) in panel.series.iter().enumerate() {
        let mut points = String::new();
        for (x, y) in t.iter().zip(&s.values).filter(|(_, y)| y.is_finite()) {
            let _ = write!(points, "{:.2},{:.2} ", px(*x), py(*y));
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            s.color,
            points.trim_end()
        );
        let ly = top + 12.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.1}" y="{:.1}" font-size="11">{}</text>"#,
            right + 8.0,
            right + 28.0,
            s.color,
            right + 32.0,
            ly + 4.0,
            s.name
        );
    }
}

fn render(panels: &[Panel], t: &[f64]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, t, PANEL_HEIGHT * i as f64);
    }
    out.push_str("</svg>\n");
    out
}

/// The four standard charts as `(file name, svg text)`.
pub fn render_all(rows: &[TraceRow]) -> Result<Vec<(&'static str, String)>, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let t: Vec<f64> = rows.iter().map(|r| r.t_s).collect();
    let pmv = [Panel {
        title: "Predicted mean vote",
        y_label: "PMV [-]",
        series: vec![
            series("PMV", "#1f77b4", false, rows, |r| r.y_pmv),
            series("lower", "#2ca02c", true, rows, |r| r.y_lb),
            series("upper", "#d62728", true, rows, |r| r.y_ub),
        ],
    }];
    let cab = [Panel {
        title: "Cabin temperature",
        y_label: "T_cab [°C]",
        series: vec![series("T_cab", "#ff7f0e", false, rows, |r| r.t_cab_k - 273.15)],
    }];
    let controls = [
        Panel {
            title: "Blower air mass flow",
            y_label: "m_bl [kg/s]",
            series: vec![series("m_bl", "#9467bd", false, rows, |r| r.m_bl_kgps)],
        },
        Panel {
            title: "Evaporator temperature",
            y_label: "T_evap [°C]",
            series: vec![
                series("setpoint", "#8c564b", true, rows, |r| r.t_evap_sp_k - 273.15),
                series("T_evap", "#17becf", false, rows, |r| r.t_evap_k - 273.15),
            ],
        },
    ];
    let powers = [Panel {
        title: "Electrical power",
        y_label: "P [W]",
        series: vec![
            series("compressor", "#1f77b4", false, rows, |r| r.p_comp_w),
            series("blower", "#ff7f0e", false, rows, |r| r.p_bl_w),
            series("total", "#333333", true, rows, |r| r.p_comp_w + r.p_bl_w),
        ],
    }];
    Ok(vec![
        (PLOT_FILES[0], render(&pmv, &t)),
        (PLOT_FILES[1], render(&cab, &t)),
        (PLOT_FILES[2], render(&controls, &t)),
        (PLOT_FILES[3], render(&powers, &t)),
    ])
}

/// Writes the four charts into `dir`, returning their paths.
pub fn write_plots(rows: &[TraceRow], dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let charts = render_all(rows)?;
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, svg) in charts {
        let p = dir.join(name);
        std::fs::write(&p, svg)?;
        paths.push(p);
    }
    Ok(paths)
}
