//! Dense matrix export: raw little-endian `f64` values in row-major order,
//! with a JSON sidecar (`<file>.json`) describing the shape.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub rows: usize,
    pub cols: usize,
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<()> {
    let bytes: Vec<u8> = m.as_slice().iter().flat_map(|x| x.to_le_bytes()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let sidecar = MatrixSidecar {
        rows: m.rows(),
        cols: m.cols(),
        dtype: "float64".into(),
        byte_order: "little".into(),
        layout: "row-major".into(),
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
    fs::write(&side, json + "\n").map_err(|e| Error::io(&side, e))
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let side = sidecar_path(path);
    let meta: MatrixSidecar = serde_json::from_slice(
        &fs::read(&side).map_err(|e| Error::io(&side, e))?,
    )
    .map_err(|e| Error::Parse {
        path: side.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if meta.dtype != "float64" || bytes.len() != meta.rows * meta.cols * 8 {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            message: format!("expected {}x{} float64 values", meta.rows, meta.cols),
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DenseMatrix::from_row_major(meta.rows, meta.cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.f64");
        let m = DenseMatrix::from_rows(&[vec![1.0, -2.5], vec![3.25, 0.0], vec![1e-300, 7.0]]);
        write_matrix(&p, &m).unwrap();
        let raw = fs::read(&p).unwrap();
        assert_eq!(raw.len(), 48);
        assert_eq!(&raw[8..16], &(-2.5f64).to_le_bytes());
        assert_eq!(read_matrix(&p).unwrap(), m);
        let side: MatrixSidecar =
            serde_json::from_slice(&fs::read(sidecar_path(&p)).unwrap()).unwrap();
        assert_eq!((side.rows, side.cols), (3, 2));
    }
}
