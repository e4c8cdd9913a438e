//! CSV / JSON writers for result tables.
//!
//! Column sets are fixed by the row types:
//!
//! * results: `run_id, algorithm, scheme, axis_value, objective, power_w,
//!   min_rate, min_secrecy_rate, crb_det, iterations, status`
//! * traces: `run_id, iteration, objective, penalty, dinkelbach`
//! * beampatterns: `matrix_id, angle_deg, gain_db`
//!
//! Missing values (failed runs, no sweep axis) are empty CSV cells and JSON
//! `null`.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{IsacError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

impl FromStr for OutputFormat {
    type Err = IsacError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(IsacError::Config(format!("unknown output format '{other}'"))),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IsacError + '_ {
    move |source| IsacError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `rows` to `path`; the header comes from the row type's fields.
pub fn emit_rows<T: Serialize>(rows: &[T], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(file);
            for r in rows {
                w.serialize(r).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(io_err(path))
        }
        OutputFormat::Json => {
            let mut w = BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, rows)
                .map_err(|e| IsacError::Io { path: path.display().to_string(), source: e.into() })?;
            w.write_all(b"\n").and_then(|_| w.flush()).map_err(io_err(path))
        }
    }
}

/// Reads rows written by [`emit_rows`].
pub fn read_rows<T: DeserializeOwned>(format: OutputFormat, path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    match format {
        OutputFormat::Csv => csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<Vec<T>, _>>()
            .map_err(|e| csv_err(path, e)),
        OutputFormat::Json => serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| IsacError::Io { path: path.display().to_string(), source: e.into() }),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> IsacError {
    IsacError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}
