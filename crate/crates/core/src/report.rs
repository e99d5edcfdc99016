//! CSV emission for the plot-ready reports. Every file carries a header row.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::counting::{ReportRow, WeylSums};
use crate::error::Result;
use crate::thermo::{PressureCurve, PressureSample, ThermoProfile};
use crate::transfer::DecayResult;

/// One line of the Weyl output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeylRow {
    pub n: usize,
    pub k: usize,
    pub magnitude: f64,
    pub sample_size: usize,
}

impl WeylRow {
    /// Rows for `k = 1..`; an empty selection yields no rows.
    pub fn from_sums(sums: &WeylSums) -> Vec<WeylRow> {
        sums.magnitudes
            .iter()
            .enumerate()
            .map(|(i, &magnitude)| WeylRow {
                n: sums.n,
                k: i + 1,
                magnitude,
                sample_size: sums.sample_size,
            })
            .collect()
    }
}

/// Serializes `rows` with a header, even when `rows` is empty.
pub fn write_rows<T: Serialize, W: Write>(out: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_string<T: Serialize>(header: &[&str], rows: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_rows(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Writes through a sibling temporary file so readers never see a partial report.
pub fn write_file<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let text = to_string(header, rows)?;
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub const PRESSURE_HEADER: &[&str] = &["t", "q", "q1", "q2", "n_used"];
pub const PROFILE_HEADER: &[&str] = &["alpha", "xi", "sigma2", "H", "residual", "n_used"];
pub const DECAY_HEADER: &[&str] = &["b", "k", "depth", "n_steps", "rate"];
pub const WEYL_HEADER: &[&str] = &["n", "k", "magnitude", "sample_size"];
pub const COUNT_HEADER: &[&str] = &[
    "n",
    "count",
    "prediction",
    "ratio",
    "alpha",
    "xi",
    "sigma2",
    "H",
    "interval_a",
    "interval_b",
    "arc_center",
    "arc_width",
];

pub fn pressure_csv(curve: &PressureCurve) -> Result<String> {
    to_string::<PressureSample>(PRESSURE_HEADER, &curve.samples)
}

pub fn profile_csv(profiles: &[ThermoProfile]) -> Result<String> {
    to_string(PROFILE_HEADER, profiles)
}

pub fn decay_csv(rows: &[DecayResult]) -> Result<String> {
    to_string(DECAY_HEADER, rows)
}

pub fn count_csv(rows: &[ReportRow]) -> Result<String> {
    to_string(COUNT_HEADER, rows)
}

pub fn weyl_csv(sums: &[WeylSums]) -> Result<String> {
    let rows: Vec<WeylRow> = sums.iter().flat_map(WeylRow::from_sums).collect();
    to_string(WEYL_HEADER, &rows)
}
