//! Artifact writers: CSV with fixed 17-significant-digit floats, JSON reports
//! and the run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use orlicz_core::solver::DiscreteSolution;
use orlicz_core::MarginReport;
use serde::Serialize;

use crate::checks::{CheckOutcome, Table};
use crate::error::LabError;

/// `v` with 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Io(e.to_string())
}

pub fn write_table<W: Write>(sink: W, table: &Table) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_to_string(table: &Table) -> Result<String, LabError> {
    let mut buf = Vec::new();
    write_table(&mut buf, table)?;
    String::from_utf8(buf).map_err(|e| LabError::Io(e.to_string()))
}

pub const SUMMARY_HEADER: [&str; 9] = [
    "check",
    "anchor",
    "lhs",
    "rhs",
    "margin",
    "tolerance",
    "calibrated",
    "pass",
    "hypothesis",
];

pub fn write_summary<W: Write>(sink: W, outcomes: &[CheckOutcome]) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for o in outcomes {
        let r = &o.report;
        w.write_record([
            o.name.clone(),
            r.anchor.clone(),
            fmt_f64(r.lhs),
            fmt_f64(r.rhs),
            fmt_f64(r.margin),
            fmt_f64(r.tolerance),
            r.calibrated.map(fmt_f64).unwrap_or_default(),
            r.pass.to_string(),
            if o.hypothesis_violation {
                "violated".into()
            } else {
                "held".into()
            },
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportRecord<'a> {
    pub check: &'a str,
    pub anchor: &'a str,
    pub config_hash: &'a str,
    pub seed: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub calibrated: Option<f64>,
    pub pass: bool,
    pub hypothesis_violation: bool,
    pub notes: &'a [String],
}

impl<'a> ReportRecord<'a> {
    pub fn new(name: &'a str, r: &'a MarginReport, hypothesis_violation: bool) -> Self {
        Self {
            check: name,
            anchor: &r.anchor,
            config_hash: &r.provenance.config_hash,
            seed: r.provenance.seed,
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.margin,
            tolerance: r.tolerance,
            calibrated: r.calibrated,
            pass: r.pass,
            hypothesis_violation,
            notes: &r.notes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub checks: Vec<ManifestCheck>,
    pub slices: Vec<SliceEntry>,
    pub files: Vec<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestCheck {
    pub name: String,
    pub anchor: String,
    pub pass: bool,
    pub hypothesis_violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceEntry {
    pub file: String,
    pub t: f64,
}

/// Writes every stored slice as `slices/slice_NNNN.csv` (node coordinates
/// and `u`).
pub fn write_slices(dir: &Path, u: &DiscreteSolution) -> Result<Vec<SliceEntry>, LabError> {
    let sdir = dir.join("slices");
    fs::create_dir_all(&sdir)?;
    let grid = u.grid();
    let n = grid.dim();
    let coords: Vec<Vec<f64>> = (0..grid.node_count()).map(|i| grid.node(i)).collect();
    let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    header.push("u".into());
    let mut entries = Vec::with_capacity(u.slice_times().len());
    for (k, &t) in u.slice_times().iter().enumerate() {
        let rows = coords
            .iter()
            .zip(u.slice(k))
            .map(|(x, &v)| {
                let mut row = x.clone();
                row.push(v);
                row
            })
            .collect();
        let name = format!("slice_{k:04}.csv");
        let table = Table {
            name: name.clone(),
            header: header.clone(),
            rows,
        };
        write_table(fs::File::create(sdir.join(&name))?, &table)?;
        entries.push(SliceEntry {
            file: format!("slices/{name}"),
            t,
        });
    }
    Ok(entries)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| LabError::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}
