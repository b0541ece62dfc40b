//! CSV input, JSON output and design fingerprints.

use std::fs;
use std::path::{Path, PathBuf};

use lasso_zero_core::design::{DesignMatrix, ResponseVector};
use lasso_zero_core::nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

fn input_err(path: &Path, message: impl Into<String>) -> AppError {
    AppError::Input { path: path.to_path_buf(), message: message.into() }
}

/// Reads a numeric CSV into `(rows, cols, row-major values)`.
pub fn read_table(path: &Path, has_header: bool) -> AppResult<(usize, usize, Vec<f64>)> {
    let file = fs::File::open(path).map_err(|e| input_err(path, e.to_string()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| input_err(path, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(input_err(path, format!("row {} has {} fields, expected {c}", i + 1, record.len())));
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| input_err(path, format!("row {}: cannot parse {field:?} as a number", i + 1)))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| input_err(path, "no data rows"))?;
    Ok((rows, cols, values))
}

pub fn read_design(path: &Path, has_header: bool) -> AppResult<DesignMatrix> {
    let (n, p, values) = read_table(path, has_header)?;
    DesignMatrix::from_rows(n, p, &values).map_err(|e| input_err(path, e.to_string()))
}

/// Reads a response stored as one column or one row.
pub fn read_response(path: &Path, has_header: bool) -> AppResult<ResponseVector> {
    let (n, p, values) = read_table(path, has_header)?;
    if n != 1 && p != 1 {
        return Err(input_err(path, format!("response must be a single row or column, got {n}x{p}")));
    }
    ResponseVector::from_slice(&values).map_err(|e| input_err(path, e.to_string()))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> AppResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| output_err(path, e.into()))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:e}"))).map_err(|e| output_err(path, e.into()))?;
    }
    w.flush().map_err(|e| output_err(path, e))
}

fn output_err(path: &Path, source: std::io::Error) -> AppError {
    AppError::Output { path: path.to_path_buf(), source }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> AppResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| output_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> AppResult<()> {
    fs::write(path, text).map_err(|e| output_err(path, e))
}

pub fn ensure_dir(dir: &Path) -> AppResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))?;
    Ok(dir.to_path_buf())
}

/// SHA-256 over the shape and the little-endian column-major entries.
pub fn design_hash(x: &DesignMatrix) -> String {
    let mut h = Sha256::new();
    h.update((x.nrows() as u64).to_le_bytes());
    h.update((x.ncols() as u64).to_le_bytes());
    for v in x.values().iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn reads_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        let mut f = fs::File::create(&p).unwrap();
        writeln!(f, "a,b\n1,2\n3, 4.5\n").unwrap();
        let x = read_design(&p, true).unwrap();
        assert_eq!(x.values()[(1, 1)], 4.5);
        assert!(read_design(&p, false).is_err());
    }

    #[test]
    fn response_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("y.csv");
        fs::write(&p, "1,2,3\n").unwrap();
        assert_eq!(read_response(&p, false).unwrap().len(), 3);
        fs::write(&p, "1\n2\n").unwrap();
        assert_eq!(read_response(&p, false).unwrap().len(), 2);
        fs::write(&p, "1,2\n3,4\n").unwrap();
        assert!(read_response(&p, false).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = DesignMatrix::from_rows(2, 1, &[1.0, 2.0]).unwrap();
        let b = DesignMatrix::from_rows(1, 2, &[1.0, 2.0]).unwrap();
        assert_ne!(design_hash(&a), design_hash(&b));
        assert_eq!(design_hash(&a), design_hash(&a.clone()));
        assert_eq!(design_hash(&a).len(), 64);
    }
}
