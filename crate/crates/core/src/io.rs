//! CSV files. Every file starts with one comment line
//!
//! ```text
//! # dexsim 0.1.0 config_sha256=<hex> B_T=0.008 units: tau_ns[ns] g2_par[1] g2_cross[1] dcp[1]
//! ```
//!
//! followed by a header row and the data.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::RunConfig;
use crate::correlator::{CorrelationCurve, SpectrumResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CURVE_COLUMNS: [&str; 4] = ["tau_ns", "g2_par", "g2_cross", "dcp"];
pub const CURVE_UNITS: &str = "tau_ns[ns] g2_par[1] g2_cross[1] dcp[1] counts[1]";
pub const SPECTRUM_UNITS: &str = "freq_MHz[MHz] amplitude[ns]";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("{0}: cannot read file")]
    Unreadable(PathBuf),
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path}:{line}: bad value `{value}` in column `{column}`")]
    BadValue { path: PathBuf, line: usize, column: String, value: String },
    #[error("{path}:{line}: {message}")]
    Malformed { path: PathBuf, line: usize, message: String },
    #[error("{0}: no data rows")]
    Empty(PathBuf),
}

/// Contents of the leading comment line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvMeta {
    pub config_hash: String,
    pub b_field: Option<f64>,
    pub units: String,
}

impl CsvMeta {
    pub fn new(config: &RunConfig, b_field: Option<f64>, units: &str) -> Self {
        Self { config_hash: config.hash(), b_field, units: units.to_string() }
    }

    pub fn line(&self) -> String {
        let mut s = format!("# dexsim {VERSION} config_sha256={}", self.config_hash);
        if let Some(b) = self.b_field {
            s.push_str(&format!(" B_T={b}"));
        }
        s.push_str(&format!(" units: {}", self.units));
        s
    }

    /// Parse a comment line written by [`CsvMeta::line`]. Unknown content is
    /// ignored.
    pub fn parse(line: &str) -> Self {
        let mut meta = Self::default();
        let body = line.trim_start_matches('#');
        let (head, units) = body.split_once("units:").unwrap_or((body, ""));
        meta.units = units.trim().to_string();
        for tok in head.split_whitespace() {
            if let Some(h) = tok.strip_prefix("config_sha256=") {
                meta.config_hash = h.to_string();
            } else if let Some(b) = tok.strip_prefix("B_T=") {
                meta.b_field = b.parse().ok();
            }
        }
        meta
    }
}

/// `x` rounded to `digits` significant digits, printed in shortest form.
pub fn fmt_num(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x);
    format!("{rounded}")
}

/// Write a comment line, a header and rows.
pub fn write_table<I>(path: &Path, meta: &CsvMeta, header: &[&str], rows: I) -> Result<(), IoError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io_err = |source| IoError::Io { path: path.to_path_buf(), source };
    let csv_err = |source| IoError::Csv { path: path.to_path_buf(), source };
    let mut file = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(file, "{}", meta.line()).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_curve_csv(path: &Path, curve: &CorrelationCurve, meta: &CsvMeta, digits: usize) -> Result<(), IoError> {
    let mut header = CURVE_COLUMNS.to_vec();
    if curve.counts.is_some() {
        header.push("counts");
    }
    let rows = (0..curve.len()).map(|k| {
        let mut row = vec![
            fmt_num(curve.taus[k], digits),
            fmt_num(curve.g2_par[k], digits),
            fmt_num(curve.g2_cross[k], digits),
            curve.dcp[k].map(|d| fmt_num(d, digits)).unwrap_or_default(),
        ];
        if let Some(c) = &curve.counts {
            row.push(fmt_num(c[k], digits));
        }
        row
    });
    write_table(path, meta, &header, rows)
}

pub fn write_spectrum_csv(path: &Path, s: &SpectrumResult, meta: &CsvMeta, digits: usize) -> Result<(), IoError> {
    let rows = s.freqs_mhz.iter().zip(&s.amplitude).map(|(f, a)| vec![fmt_num(*f, digits), fmt_num(*a, digits)]);
    write_table(path, meta, &["freq_MHz", "amplitude"], rows)
}

/// Write the effective config next to the outputs.
pub fn write_effective_config(dir: &Path, config: &RunConfig) -> Result<PathBuf, IoError> {
    let path = dir.join("config.effective.toml");
    let text = format!("# dexsim {VERSION} config_sha256={}\n{}", config.hash(), config.to_toml_string());
    std::fs::write(&path, text).map_err(|source| IoError::Io { path: path.clone(), source })?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCurve {
    pub curve: CorrelationCurve,
    pub meta: CsvMeta,
}

/// Read a curve CSV. The DCP column may have empty (masked) entries; an
/// optional `counts` column carries raw coincidences.
pub fn read_curve_csv(path: &Path) -> Result<LoadedCurve, SchemaError> {
    let file = File::open(path).map_err(|_| SchemaError::Unreadable(path.to_path_buf()))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|_| SchemaError::Unreadable(path.to_path_buf()))?;
    let (meta, rest): (CsvMeta, Box<dyn Read>) = if first.starts_with('#') {
        (CsvMeta::parse(first.trim_end()), Box::new(reader))
    } else {
        (CsvMeta::default(), Box::new(std::io::Cursor::new(first.into_bytes()).chain(reader)))
    };
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(rest);
    let headers = r
        .headers()
        .map_err(|e| SchemaError::Malformed { path: path.to_path_buf(), line: 2, message: e.to_string() })?
        .clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(SchemaError::MissingColumn { path: path.to_path_buf(), column: name })
    };
    let idx = [col("tau_ns")?, col("g2_par")?, col("g2_cross")?, col("dcp")?];
    let counts_idx = headers.iter().position(|h| h == "counts");

    let mut curve = CorrelationCurve {
        taus: vec![],
        g2_par: vec![],
        g2_cross: vec![],
        dcp: vec![],
        normalization: [f64::NAN; 2],
        counts: counts_idx.map(|_| vec![]),
    };
    for (row, rec) in r.records().enumerate() {
        let line = row + 3;
        let rec = rec.map_err(|e| SchemaError::Malformed { path: path.to_path_buf(), line, message: e.to_string() })?;
        let num = |i: usize, allow_empty: bool| -> Result<Option<f64>, SchemaError> {
            let s = rec.get(i).unwrap_or("");
            if s.is_empty() && allow_empty {
                return Ok(None);
            }
            s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some).ok_or_else(|| SchemaError::BadValue {
                path: path.to_path_buf(),
                line,
                column: headers[i].to_string(),
                value: s.to_string(),
            })
        };
        curve.taus.push(num(idx[0], false)?.unwrap());
        curve.g2_par.push(num(idx[1], false)?.unwrap());
        curve.g2_cross.push(num(idx[2], false)?.unwrap());
        curve.dcp.push(num(idx[3], true)?);
        if let (Some(i), Some(c)) = (counts_idx, curve.counts.as_mut()) {
            c.push(num(i, false)?.unwrap());
        }
    }
    if curve.is_empty() {
        return Err(SchemaError::Empty(path.to_path_buf()));
    }
    if curve.taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SchemaError::Malformed {
            path: path.to_path_buf(),
            line: 3,
            message: "tau_ns must be strictly increasing".into(),
        });
    }
    Ok(LoadedCurve { curve, meta })
}
