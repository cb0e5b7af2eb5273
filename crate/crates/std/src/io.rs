//! Reading and writing point clouds.
//!
//! CSV files hold one sample per line, comma separated, with an optional
//! single header line; LF and CRLF line endings are both accepted. The raw
//! binary layout is two little-endian `u64` (`n`, `d`) followed by `n·d`
//! little-endian `f64` in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use dpswd_core::{EmpiricalMeasure, Matrix};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: file contains no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: line {line} has {found} fields, expected {expected}")]
    Ragged {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}: line {line}, column {column}: cannot parse {value:?} as a number")]
    Cell {
        path: PathBuf,
        line: u64,
        column: usize,
        value: String,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        source: dpswd_core::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a numeric matrix from a CSV file. Line numbers in errors are
/// 1-based and count the header.
pub fn read_csv_matrix(path: &Path, has_header: bool) -> Result<Matrix, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(file));
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|source| IoError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *cols.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IoError::Ragged {
                path: path.to_path_buf(),
                line,
                expected,
                found: record.len(),
            });
        }
        for (j, cell) in record.iter().enumerate() {
            let v = cell.parse::<f64>().map_err(|_| IoError::Cell {
                path: path.to_path_buf(),
                line,
                column: j + 1,
                value: cell.to_string(),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = match cols {
        Some(c) if rows > 0 => c,
        _ => {
            return Err(IoError::Empty {
                path: path.to_path_buf(),
            })
        }
    };
    Matrix::from_row_major(rows, cols, data).map_err(|source| IoError::Data {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a uniform empirical measure, one sample per CSV line.
pub fn load_csv(path: &Path, has_header: bool) -> Result<EmpiricalMeasure, IoError> {
    let m = read_csv_matrix(path, has_header)?;
    EmpiricalMeasure::uniform(m).map_err(|source| IoError::Data {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes rows as CSV. Floats use the shortest representation that parses
/// back to the same value.
pub fn save_csv(path: &Path, m: &Matrix, header: Option<&[&str]>) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_csv(BufWriter::new(file), m, header).map_err(|source| IoError::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv<W: Write>(w: W, m: &Matrix, header: Option<&[&str]>) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    if let Some(h) = header {
        out.write_record(h)?;
    }
    for row in m.iter_rows() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_binary(path: &Path, m: &Matrix) -> Result<(), IoError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(io_err(path));
    put(&(m.rows() as u64).to_le_bytes())?;
    put(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(io_err(path))
}

pub fn load_binary(path: &Path) -> Result<Matrix, IoError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let format = |reason: String| IoError::Format {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 16 {
        return Err(format(format!("{} bytes, header needs 16", bytes.len())));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let (n, d) = (word(0), word(1));
    let body = bytes.len() as u64 - 16;
    if n.checked_mul(d).and_then(|c| c.checked_mul(8)) != Some(body) {
        return Err(format(format!("header says {n}x{d} but body has {body} bytes")));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_row_major(n as usize, d as usize, data).map_err(|source| IoError::Data {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a measure by extension: `.bin` is raw binary, anything else CSV.
pub fn load_measure(path: &Path, has_header: bool) -> Result<EmpiricalMeasure, IoError> {
    if path.extension().is_some_and(|e| e == "bin") {
        let m = load_binary(path)?;
        EmpiricalMeasure::uniform(m).map_err(|source| IoError::Data {
            path: path.to_path_buf(),
            source,
        })
    } else {
        load_csv(path, has_header)
    }
}
