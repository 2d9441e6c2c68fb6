//! CSV tables and JSON sidecars.
//!
//! Tables have a header row, `.` as decimal separator and `\n` line endings.
//! Floats are written in Rust's shortest round-trip form, so identical values
//! give identical bytes.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, Terminator, WriterBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{CountTrace, Provenance};

pub const DIFFRACTION_HEADER: [&str; 2] = ["theta_y_rad", "transmitted_fraction"];
pub const FRINGE_HEADER: [&str; 2] = ["x3_m", "I1_counts_per_s"];
pub const TILT_HEADER: [&str; 2] = ["theta_z_rad", "visibility"];
pub const MISMATCH_HEADER: [&str; 2] = ["delta_L_m", "visibility"];
pub const SLIT_HEADER: [&str; 3] = ["slit_width_m", "I0_counts_per_s", "visibility"];
pub const REVIVAL_HEADER: [&str; 3] = ["current_A", "visibility", "visibility_sigma"];
pub const TRACE_HEADER: [&str; 2] = ["drive_value", "counts"];

/// Column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Invalid(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(File::create(path)?)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut r = ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| Error::Invalid(format!("row {}: '{f}': {e}", line + 2))))
                .collect::<Result<Vec<_>>>()?;
            if row.len() != header.len() {
                return Err(Error::Invalid(format!("row {} has {} fields, header has {}", line + 2, row.len(), header.len())));
            }
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }
}

/// JSON sidecar stored next to a count-trace CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSidecar {
    pub counting_time_s: f64,
    pub seed: Option<u64>,
    pub provenance: Provenance,
    #[serde(default)]
    pub background_counts: Vec<u64>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn trace_table(trace: &CountTrace) -> Table {
    let mut t = Table::new(&TRACE_HEADER);
    for (x, n) in trace.drive.iter().zip(&trace.counts) {
        t.push(vec![*x, *n as f64]);
    }
    t
}

/// Write `<path>` (CSV) and `<path>.json` (sidecar).
pub fn save_trace(trace: &CountTrace, path: &Path) -> Result<()> {
    trace_table(trace).save(path)?;
    let side = TraceSidecar {
        counting_time_s: trace.counting_time,
        seed: trace.seed,
        provenance: trace.provenance.clone(),
        background_counts: trace.background.clone(),
    };
    save_json(&side, &sidecar_path(path))
}

/// Read a trace CSV; the sidecar is used when present, otherwise the trace is
/// marked external with the default counting time.
pub fn load_trace(path: &Path) -> Result<CountTrace> {
    let table = Table::load(path)?;
    let drive = table.column(TRACE_HEADER[0]).ok_or_else(|| Error::Invalid(format!("{}: missing drive_value column", path.display())))?;
    let counts = table.column(TRACE_HEADER[1]).ok_or_else(|| Error::Invalid(format!("{}: missing counts column", path.display())))?;
    let counts = counts
        .into_iter()
        .map(|c| {
            if c >= 0.0 && c.fract() == 0.0 {
                Ok(c as u64)
            } else {
                Err(Error::Invalid(format!("counts must be non-negative integers, got {c}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let side_path = sidecar_path(path);
    let trace = if side_path.exists() {
        let s: TraceSidecar = load_json(&side_path)?;
        CountTrace { drive, counts, counting_time: s.counting_time_s, seed: s.seed, provenance: s.provenance, background: s.background_counts }
    } else {
        CountTrace {
            drive,
            counts,
            counting_time: crate::signal::DEFAULT_COUNTING_TIME,
            seed: None,
            provenance: Provenance::External { source: path.display().to_string() },
            background: Vec::new(),
        }
    };
    trace.validate()?;
    Ok(trace)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
