//! Flat CSV rows (`time,eps,M,quantity,value`) and JSON summaries.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// One diagnostic value. `cutoff` is `None` for quantities without a
/// frequency cut-off, written as an empty column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub time: f64,
    pub eps: f64,
    pub cutoff: Option<i32>,
    pub quantity: String,
    pub value: f64,
}

impl DiagnosticRow {
    pub fn new(time: f64, eps: f64, cutoff: Option<i32>, quantity: impl Into<String>, value: f64) -> Self {
        DiagnosticRow { time, eps, cutoff, quantity: quantity.into(), value }
    }
}

pub fn write_rows_csv(path: &Path, rows: &[DiagnosticRow]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "time,eps,M,quantity,value")?;
    for r in rows {
        let m = r.cutoff.map(|m| m.to_string()).unwrap_or_default();
        writeln!(w, "{:e},{:e},{},{},{:e}", r.time, r.eps, m, r.quantity, r.value)?;
    }
    w.flush()
}

pub fn write_summary_json<T: Serialize>(path: &Path, summary: &T) -> io::Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(w, summary).map_err(io::Error::other)
}
