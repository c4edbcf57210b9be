//! Drive-cycle CSV files: `t_s,v_mps,w_rad_wm2,t_amb_k`, one row per time
//! point, strictly increasing time. Rows are resampled onto the controller
//! grid by linear interpolation.

use std::path::Path;

use ceco_core::model::ExogenousSample;
use ceco_core::sim::DriveCycle;

/// Synthetic 600 s urban cycle with a hot-ambient, falling-irradiance
/// weather trace, sampled at 1 s.
pub const BUNDLED_CYCLE_CSV: &str = include_str!("../data/sc03_synthetic.csv");
pub const BUNDLED_CYCLE_NAME: &str = "sc03-synthetic";

pub const COLUMNS: [&str; 4] = ["t_s", "v_mps", "w_rad_wm2", "t_amb_k"];

#[derive(Debug, thiserror::Error)]
pub enum CycleError {
    #[error("cannot read cycle {path}: {message}")]
    Io { path: String, message: String },
    #[error("cycle is missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("cycle has no data rows")]
    Empty,
    #[error("invalid cycle: {0}")]
    Invalid(ceco_core::ValidationErrors),
}

fn row_err(line: u64, message: impl Into<String>) -> CycleError {
    CycleError::Row {
        line,
        message: message.into(),
    }
}

pub fn load_cycle(path: &Path, dt: f64) -> Result<DriveCycle, CycleError> {
    let text = std::fs::read_to_string(path).map_err(|e| CycleError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cycle".to_string());
    parse_cycle(&text, &name, dt)
}

pub fn bundled_cycle(dt: f64) -> Result<DriveCycle, CycleError> {
    parse_cycle(BUNDLED_CYCLE_CSV, BUNDLED_CYCLE_NAME, dt)
}

pub fn parse_cycle(text: &str, name: &str, dt: f64) -> Result<DriveCycle, CycleError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| row_err(1, e.to_string()))?.clone();
    let mut idx = [0usize; 4];
    for (slot, col) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .ok_or(CycleError::MissingColumn(col))?;
    }

    let mut rows: Vec<(f64, ExogenousSample)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            row_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let mut vals = [0.0f64; 4];
        for (k, (&i, col)) in idx.iter().zip(COLUMNS).enumerate() {
            let raw = rec.get(i).ok_or_else(|| row_err(line, format!("missing value for `{col}`")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| row_err(line, format!("`{col}` is not a number: {raw:?}")))?;
            if !v.is_finite() {
                return Err(row_err(line, format!("`{col}` is not finite")));
            }
            vals[k] = v;
        }
        let [t, v, w, amb] = vals;
        if let Some(&(prev, _)) = rows.last() {
            if t <= prev {
                return Err(row_err(line, format!("time {t} s does not increase (previous {prev} s)")));
            }
        }
        if v < 0.0 {
            return Err(row_err(line, format!("negative speed {v} m/s")));
        }
        if w < 0.0 {
            return Err(row_err(line, format!("negative irradiance {w} W/m²")));
        }
        rows.push((
            t,
            ExogenousSample {
                v_veh: v,
                w_rad: w,
                t_amb: amb,
            },
        ));
    }
    if rows.is_empty() {
        return Err(CycleError::Empty);
    }
    DriveCycle::resample(name, &rows, dt).map_err(CycleError::Invalid)
}
