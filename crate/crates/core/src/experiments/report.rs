//! Report types and their CSV / JSON encodings.
//!
//! JSON carries the whole report. CSV carries only the rows, with the
//! columns `n1,n2,m,s1,s2,t1,t2,theory,exact,estimate,stderr,ratio`; missing
//! values are empty cells.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Bumped whenever a field of the JSON encoding changes meaning.
pub const REPORT_VERSION: u32 = 1;

pub const CSV_COLUMNS: [&str; 12] = [
    "n1", "n2", "m", "s1", "s2", "t1", "t2", "theory", "exact", "estimate", "stderr", "ratio",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    MonteCarlo,
    ExactTable,
    MonteCarloTable,
}

/// One `(n, pair)` row. Covariances are of the normalized statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n1: u64,
    pub n2: u64,
    pub m: u64,
    pub s1: f64,
    pub s2: f64,
    pub t1: f64,
    pub t2: f64,
    pub theory: f64,
    pub exact: Option<f64>,
    pub estimate: Option<f64>,
    pub stderr: Option<f64>,
    /// `estimate / theory` for Monte Carlo reports, `exact / theory` for
    /// exact tables.
    pub ratio: Option<f64>,
}

/// Distance to the limit along the size sequence for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub pair: usize,
    pub n1: u64,
    pub n2: u64,
    pub error: f64,
    /// `error / previous error` for the same pair.
    pub error_ratio: Option<f64>,
}

/// Sample shape of the normalized statistic at one grid point, with
/// normal-theory standard errors `√(6/N)` and `√(24/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub n1: u64,
    pub n2: u64,
    pub point: [f64; 2],
    pub skewness: f64,
    pub skewness_stderr: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_stderr: f64,
}

impl Shape {
    pub fn from_sample(n: [u64; 2], point: [f64; 2], xs: &[f64]) -> Self {
        let len = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / len;
        let central = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>() / len;
        let m2 = central(2);
        Self {
            n1: n[0],
            n2: n[1],
            point,
            skewness: central(3) / m2.powf(1.5),
            skewness_stderr: (6.0 / len).sqrt(),
            excess_kurtosis: central(4) / (m2 * m2) - 3.0,
            excess_kurtosis_stderr: (24.0 / len).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitInfo {
    pub regime: String,
    /// Hurst pair of the sheet limit; absent at critical speed.
    pub hurst: Option<[f64; 2]>,
    pub sigma2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub kind: ReportKind,
    pub config: ExperimentConfig,
    pub limit: LimitInfo,
    /// Mass of the persistence law at `u = (1, 1)`; absent for independent
    /// persistence.
    pub atom_mass: Option<f64>,
    /// How replicate seeds follow from `config.master_seed`.
    pub seed_derivation: String,
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovReport {
    pub version: u32,
    pub metadata: Metadata,
    pub rows: Vec<Row>,
    #[serde(default)]
    pub convergence: Vec<ConvergenceRow>,
    #[serde(default)]
    pub shapes: Vec<Shape>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl ToString) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

pub fn write_rows_csv<W: Write>(rows: &[Row], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows_csv<R: Read>(input: R) -> std::result::Result<Vec<Row>, csv::Error> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_COLUMNS {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected columns {header:?}"),
        )));
    }
    r.deserialize().collect()
}

/// Writes the report to `out`; JSON is pretty-printed with a trailing
/// newline.
pub fn write_report<W: Write>(report: &CovReport, mut out: W, format: Format) -> std::io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            out.write_all(b"\n")
        }
        Format::Csv => write_rows_csv(&report.rows, out).map_err(std::io::Error::other),
    }
}

pub fn emit_report(report: &CovReport, path: &Path, format: Format) -> Result<()> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut out = std::io::BufWriter::new(file);
    write_report(report, &mut out, format).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

pub fn parse_report_json(path: &Path) -> Result<CovReport> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let report: CovReport = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
    if report.version != REPORT_VERSION {
        return Err(format_err(
            path,
            format!("report version {} is not supported (expected {REPORT_VERSION})", report.version),
        ));
    }
    Ok(report)
}

pub fn parse_rows_csv(path: &Path) -> Result<Vec<Row>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    read_rows_csv(file).map_err(|e| format_err(path, e))
}
