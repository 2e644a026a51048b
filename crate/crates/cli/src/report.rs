//! Serialized artifacts: JSON reports and CSV tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gradsense::analysis::{CompletenessDiagnostic, GramianSummary, LocusReport, StrategicVerdict};
use gradsense::sensing::SensorKind;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const TOOL_VERSION: &str = concat!("gradsense ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorLocus {
    pub index: usize,
    pub kind: SensorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<LocusReport>,
    /// Why the locus rules declined, when they did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declined: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub tool_version: String,
    pub config: RunConfig,
    pub verdict: StrategicVerdict,
    pub locus: Vec<SensorLocus>,
    pub gramian: GramianSummary,
    pub gramian_positive_definite: bool,
    pub completeness: CompletenessDiagnostic,
    pub simple_spectrum: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramianReport {
    pub tool_version: String,
    pub summary: GramianSummary,
    pub pd_tol: f64,
    pub positive_definite: bool,
    /// Nondecreasing.
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub n: u32,
    pub m: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub tool_version: String,
    pub samples: usize,
    pub channels: usize,
    pub regularization: f64,
    pub residual: f64,
    pub rcond: f64,
    pub err_gamma: Option<f64>,
    pub err_boundary: Option<f64>,
    /// `|c_est - c_true| / |c_true|` when the configured state is known.
    pub coefficient_error: Option<f64>,
    pub estimated_coeffs: Vec<CoefficientEntry>,
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Numerical(format!("cannot serialize report: {e}")))
}

/// Shortest text that reads back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// In-memory CSV table, written only once complete.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<S: AsRef<[u8]>>(header: &[S]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).map_err(csv_err)?;
        Ok(Self { writer })
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> CliResult<()> {
        self.writer.write_record(fields).map_err(csv_err)
    }

    pub fn into_string(self) -> CliResult<String> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Numerical(format!("csv: {e}")))?;
        String::from_utf8(bytes).map_err(|e| CliError::Numerical(format!("csv: {e}")))
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Numerical(format!("csv: {e}"))
}

/// Writes every artifact or none: all contents are built before this runs,
/// and the directory is created on demand.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
    for (name, contents) in files {
        let path = dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

/// Header, times and per-time sample rows.
pub type OutputsTable = (Vec<String>, Vec<f64>, Vec<Vec<f64>>);

/// Reads a simulate-style CSV: header `t,y_1..y_q`, then one row per time.
pub fn read_outputs(text: &str) -> CliResult<OutputsTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("outputs header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("outputs row {}: {e}", k + 1)))?;
        if rec.len() != header.len() {
            return Err(CliError::Data(format!(
                "outputs row {}: {} columns, header has {}",
                k + 1,
                rec.len(),
                header.len()
            )));
        }
        let mut vals = rec.iter().enumerate().map(|(c, f)| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Data(format!("outputs row {}, column {}: {f:?} is not a number", k + 1, c + 1)))
        });
        times.push(vals.next().transpose()?.unwrap_or(f64::NAN));
        samples.push(vals.collect::<CliResult<Vec<_>>>()?);
    }
    Ok((header, times, samples))
}
