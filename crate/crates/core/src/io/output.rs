use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use super::data::{read_table_file, Table};
use crate::error::{Error, Result};
use crate::mcmc::{diagnose, AcceptanceStats, ParameterDiagnostics, SampleRecord, SampleSink};

pub const SCHEMA_VERSION: u32 = 1;

/// Streams retained draws to a CSV file, one flushed row per draw.
///
/// Columns: `iteration`, the parameter columns, `loglik`.
pub struct CsvSampleSink {
    writer: csv::Writer<BufWriter<File>>,
    rows: usize,
    buf: Vec<String>,
}

impl CsvSampleSink {
    pub fn create(path: &Path, columns: &[String]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        let mut header = vec!["iteration".to_string()];
        header.extend(columns.iter().cloned());
        header.push("loglik".into());
        writer.write_record(&header)?;
        writer.flush()?;
        Ok(CsvSampleSink {
            writer,
            rows: 0,
            buf: Vec::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

impl SampleSink for CsvSampleSink {
    fn push(&mut self, r: &SampleRecord) -> Result<()> {
        self.buf.clear();
        self.buf.push(r.iteration.to_string());
        self.buf.extend(r.values().map(|v| format!("{v}")));
        self.buf.push(format!("{}", r.loglik));
        self.writer.write_record(&self.buf)?;
        self.writer.flush()?;
        self.rows += 1;
        Ok(())
    }
}

/// Contents of `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub schema_version: u32,
    pub generator: String,
    /// Effective configuration, defaults filled in.
    pub config: RunConfig,
    pub samples: usize,
    /// Pooled bridge acceptance rate.
    pub path_acceptance: f64,
    pub path_acceptance_by_dim: Vec<f64>,
    pub acceptance: AcceptanceStats,
    /// Keyed by column name; empty with fewer than two draws.
    pub parameters: BTreeMap<String, ParameterDiagnostics>,
    /// Log-likelihood after every sweep.
    pub loglik_trace: Vec<f64>,
}

/// Per-column diagnostics of a sample table.
pub fn column_diagnostics(
    columns: &[String],
    series: &[Vec<f64>],
    max_lag: usize,
) -> Result<BTreeMap<String, ParameterDiagnostics>> {
    let mut out = BTreeMap::new();
    for (name, x) in columns.iter().zip(series) {
        if x.len() < 2 {
            return Ok(BTreeMap::new());
        }
        out.insert(name.clone(), diagnose(name, x, max_lag.min(x.len() - 1))?);
    }
    Ok(out)
}

impl Diagnostics {
    pub fn write(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = std::io::BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(f)?)
    }
}

/// A samples CSV read back: parameter columns without `iteration` and
/// `loglik`.
#[derive(Debug, Clone)]
pub struct SampleTable {
    pub columns: Vec<String>,
    pub series: Vec<Vec<f64>>,
}

pub fn read_samples(path: &Path) -> Result<SampleTable> {
    let name = path.display().to_string();
    let table: Table = read_table_file(path)?;
    let header = table.header.clone().ok_or_else(|| Error::Data {
        path: name.clone(),
        row: 1,
        message: "samples file has no header".into(),
    })?;
    let mut columns = Vec::new();
    let mut series = Vec::new();
    for (c, h) in header.iter().enumerate() {
        if h == "iteration" || h == "loglik" {
            continue;
        }
        columns.push(h.clone());
        series.push(table.column(c));
    }
    if table.rows() < 2 {
        return Err(Error::Data {
            path: name,
            row: table.first_line,
            message: "at least two draws are needed".into(),
        });
    }
    Ok(SampleTable { columns, series })
}
