//! Metrics and comparison output, as JSON files and console tables.

use std::fmt::Write as _;
use std::path::Path;

use ceco_core::sim::{ComparisonTable, MetricsReport};

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn read_metrics(path: &Path) -> anyhow::Result<MetricsReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_comparison(path: &Path) -> anyhow::Result<ComparisonTable> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

const HEADER: [&str; 6] = ["controller", "E_tot [kJ]", "I_PMV [s]", "OTC viol [%]", "solve [ms]", "savings [%]"];

fn row_cells(m: &MetricsReport, savings: Option<f64>) -> [String; 6] {
    [
        m.controller.to_string(),
        format!("{:.1}", m.e_tot / 1000.0),
        format!("{:.1}", m.i_pmv),
        format!("{:.1}", m.otc_violation_pct),
        format!("{:.2}", m.mean_solve_time_s * 1000.0),
        savings.map_or_else(|| "-".to_string(), |s| format!("{s:.1}")),
    ]
}

fn render(rows: &[Vec<String>]) -> String {
    let cols = HEADER.len();
    let mut width = [0usize; 6];
    for (i, h) in HEADER.iter().enumerate() {
        width[i] = h.chars().count();
    }
    for r in rows {
        for (i, c) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, c) in cells.iter().enumerate() {
            if i == 0 {
                let _ = write!(out, "{c:<w$}", w = width[0]);
            } else {
                let _ = write!(out, "  {c:>w$}", w = width[i]);
            }
        }
        out.push('\n');
    };
    let header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
    line(&mut out, &header);
    let rule: Vec<String> = width.iter().map(|w| "-".repeat(*w)).collect();
    line(&mut out, &rule);
    for r in rows {
        line(&mut out, r);
    }
    out
}

/// Aligned single-controller table.
pub fn metrics_table(m: &MetricsReport) -> String {
    render(&[row_cells(m, None).to_vec()])
}

/// Aligned comparison table; failed controllers show their error instead of
/// numbers.
pub fn comparison_table(t: &ComparisonTable) -> String {
    let mut rows = Vec::new();
    let mut errors = String::new();
    for r in &t.rows {
        match &r.metrics {
            Some(m) => rows.push(row_cells(m, r.savings_pct).to_vec()),
            None => {
                let mut cells = vec![r.controller.to_string()];
                cells.extend(std::iter::repeat_n("FAILED".to_string(), 5));
                rows.push(cells);
                if let Some(e) = &r.error {
                    let _ = writeln!(errors, "{}: {e}", r.controller);
                }
            }
        }
    }
    let mut out = render(&rows);
    out.push_str(&errors);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ceco_core::mpc::ControllerKind;
    use ceco_core::sim::ComparisonRow;

    fn metrics(kind: ControllerKind, e: f64) -> MetricsReport {
        MetricsReport {
            controller: kind,
            e_tot: e,
            i_pmv: 12.5,
            otc_violation_pct: 10.0,
            mean_solve_time_s: 0.0,
            steps: 120,
        }
    }

    #[test]
    fn table_lines_align() {
        let t = ComparisonTable {
            rows: vec![
                ComparisonRow {
                    controller: ControllerKind::Baseline,
                    metrics: Some(metrics(ControllerKind::Baseline, 400_000.0)),
                    savings_pct: Some(0.0),
                    error: None,
                },
                ComparisonRow {
                    controller: ControllerKind::CecoE,
                    metrics: None,
                    savings_pct: None,
                    error: Some("boom".into()),
                },
            ],
        };
        let text = comparison_table(&t);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0].len(), lines[2].len());
        assert_eq!(lines[0].len(), lines[3].len());
        assert!(lines[2].contains("400.0"));
        assert!(lines[3].contains("FAILED"));
        assert_eq!(lines[4], "ceco-e: boom");
    }

    #[test]
    fn metrics_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        let m = metrics(ControllerKind::CecoIoch, 1.0 / 3.0);
        write_json(&p, &m).unwrap();
        assert_eq!(read_metrics(&p).unwrap(), m);
        let raw = std::fs::read_to_string(&p).unwrap();
        assert!(raw.contains("\"controller\": \"ceco-ioch\""));
    }
}
