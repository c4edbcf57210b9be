//! Trace CSV files, one row per controller period.

use std::io::{Read, Write};
use std::path::Path;

use ceco_core::sim::SimTrace;
use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: [&str; 14] = [
    "t_s",
    "t_cab_k",
    "t_evap_k",
    "t_int_k",
    "t_shell_k",
    "m_bl_kgps",
    "t_evap_sp_k",
    "p_comp_w",
    "p_bl_w",
    "y_pmv",
    "y_lb",
    "y_ub",
    "solver_iters",
    "solve_ms",
];

/// One parsed trace row, in file units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub t_cab_k: f64,
    pub t_evap_k: f64,
    pub t_int_k: f64,
    pub t_shell_k: f64,
    pub m_bl_kgps: f64,
    pub t_evap_sp_k: f64,
    pub p_comp_w: f64,
    pub p_bl_w: f64,
    pub y_pmv: f64,
    pub y_lb: f64,
    pub y_ub: f64,
    pub solver_iters: u64,
    pub solve_ms: f64,
}

impl TraceRow {
    pub fn from_trace(trace: &SimTrace) -> Vec<TraceRow> {
        trace
            .records
            .iter()
            .map(|r| TraceRow {
                t_s: r.t,
                t_cab_k: r.state.t_cab,
                t_evap_k: r.state.t_evap,
                t_int_k: r.state.t_int,
                t_shell_k: r.state.t_shell,
                m_bl_kgps: r.control.m_bl,
                t_evap_sp_k: r.control.t_evap_sp,
                p_comp_w: r.p_comp,
                p_bl_w: r.p_bl,
                y_pmv: r.y_pmv,
                y_lb: r.y_lb,
                y_ub: r.y_ub,
                solver_iters: r.solver_iters as u64,
                solve_ms: r.solve_ms,
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace header must be `{}`", TRACE_HEADER.join(","))]
    Header,
}

pub fn write_trace<W: Write>(out: W, trace: &SimTrace) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    // The header is written by serializing the first row; an empty trace
    // still gets one.
    if trace.is_empty() {
        w.write_record(TRACE_HEADER).map_err(csv_io)?;
    }
    for row in TraceRow::from_trace(trace) {
        w.serialize(row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_file(path: &Path, trace: &SimTrace) -> Result<(), TraceError> {
    let f = std::fs::File::create(path)?;
    write_trace(std::io::BufWriter::new(f), trace)
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<TraceRow>, TraceError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers().map_err(|e| TraceError::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().ne(TRACE_HEADER) {
        return Err(TraceError::Header);
    }
    let mut rows = Vec::new();
    for rec in r.deserialize::<TraceRow>() {
        let row = rec.map_err(|e| TraceError::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: match e.kind() {
                csv::ErrorKind::Deserialize { err, .. } => err.to_string(),
                _ => e.to_string(),
            },
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_trace_file(path: &Path) -> Result<Vec<TraceRow>, TraceError> {
    read_trace(std::fs::File::open(path)?)
}

fn csv_io(e: csv::Error) -> TraceError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TraceError::Io(io),
        other => TraceError::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}
