//! CSV series, flat result tables and the binary particle dump.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use marsmc_core::{Cloud, Mat, Series};

use crate::error::{PipelineError, Result};

const DATE_HEADERS: [&str; 4] = ["date", "time", "period", "month"];

fn is_date_header(h: &str) -> bool {
    DATE_HEADERS.contains(&h.trim().to_ascii_lowercase().as_str())
}

/// Reads a series with a header row. A leading column headed `date`,
/// `time`, `period` or `month` is kept as labels and not parsed.
pub fn load_csv(path: &Path) -> Result<Series> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    read_csv(file, path)
}

pub fn read_csv(input: impl Read, path: &Path) -> Result<Series> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(PipelineError::NoObservations(path.to_path_buf()));
    }
    let dated = is_date_header(&headers[0]);
    let names: Vec<String> = headers[usize::from(dated)..].to_vec();
    if names.is_empty() {
        return Err(PipelineError::Format(format!("{}: no data columns", path.display())));
    }
    let mut values = Vec::new();
    let mut dates = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        // header is line 1
        let row = rec.position().map_or(rows + 2, |p| p.line() as usize);
        for (j, cell) in rec.iter().enumerate() {
            if dated && j == 0 {
                dates.push(cell.to_string());
                continue;
            }
            let column = headers[j].clone();
            if cell.is_empty() {
                return Err(PipelineError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column,
                    message: "missing value".into(),
                });
            }
            let v: f64 = cell.parse().map_err(|_| PipelineError::Parse {
                path: path.to_path_buf(),
                row,
                column: column.clone(),
                message: format!("`{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(PipelineError::Parse {
                    path: path.to_path_buf(),
                    row,
                    column,
                    message: format!("`{cell}` is not finite"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(PipelineError::NoObservations(path.to_path_buf()));
    }
    let mat = Mat::from_row_major(rows, names.len(), values)?;
    Ok(Series::with_labels(mat, names, dated.then_some(dates))?)
}

fn csv_error(path: &Path, e: csv::Error) -> PipelineError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => PipelineError::Parse {
            path: path.to_path_buf(),
            row,
            column: "-".into(),
            message: format!("expected {expected_len} fields, found {len}"),
        },
        _ => PipelineError::Format(format!("{}: {e}", path.display())),
    }
}

/// Writes a series in the format [`load_csv`] reads. Values use the
/// shortest representation that round-trips exactly.
pub fn write_csv(series: &Series, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = Vec::new();
    if series.dates().is_some() {
        header.push("date".to_string());
    }
    header.extend(series.names().iter().cloned());
    w.write_record(&header).map_err(|e| csv_write_error(path, e))?;
    for t in 0..series.len() {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        if let Some(d) = series.dates() {
            rec.push(d[t].clone());
        }
        rec.extend(series.values().row(t).iter().map(|v| format!("{v}")));
        w.write_record(&rec).map_err(|e| csv_write_error(path, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

/// Writes a header plus rows of pre-formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_write_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_write_error(path, e))?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn csv_write_error(path: &Path, e: csv::Error) -> PipelineError {
    PipelineError::Format(format!("{}: {e}", path.display()))
}

/// Formats an optional number, leaving the cell empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

pub const CLOUD_MAGIC: &[u8; 4] = b"MSMC";
pub const CLOUD_VERSION: u32 = 1;

/// Binary dump: 16-byte header (magic, version, `P`, `k` as little-endian
/// `u32`), then `P × k` parameters row-major, `P` weights and `P`
/// log-likelihoods, all little-endian `f64`.
pub fn write_cloud(cloud: &Cloud, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| PipelineError::io(path, e))?;
    let mut w = BufWriter::new(f);
    let too_big = || PipelineError::Format("cloud too large for the dump format".into());
    let p = u32::try_from(cloud.len()).map_err(|_| too_big())?;
    let k = u32::try_from(cloud.dim()).map_err(|_| too_big())?;
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| PipelineError::io(path, e));
    put(CLOUD_MAGIC)?;
    put(&CLOUD_VERSION.to_le_bytes())?;
    put(&p.to_le_bytes())?;
    put(&k.to_le_bytes())?;
    for block in [cloud.params(), cloud.weights(), cloud.logliks()] {
        for v in block {
            put(&v.to_le_bytes())?;
        }
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

/// Contents of a cloud dump.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudDump {
    pub particles: usize,
    pub dim: usize,
    pub params: Vec<f64>,
    pub weights: Vec<f64>,
    pub logliks: Vec<f64>,
}

pub fn read_cloud(path: &Path) -> Result<CloudDump> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let bad = |m: &str| PipelineError::Format(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..4] != CLOUD_MAGIC {
        return Err(bad("not a particle dump"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(4) != CLOUD_VERSION {
        return Err(bad("unsupported dump version"));
    }
    let (p, k) = (word(8) as usize, word(12) as usize);
    let count = p * k + 2 * p;
    if bytes.len() != 16 + 8 * count {
        return Err(bad("truncated dump"));
    }
    let floats: Vec<f64> = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(CloudDump {
        particles: p,
        dim: k,
        params: floats[..p * k].to_vec(),
        weights: floats[p * k..p * k + p].to_vec(),
        logliks: floats[p * k + p..].to_vec(),
    })
}
