//! Matrix container, CSV export and instance directories.
//!
//! Container layout (all little-endian):
//!
//! | bytes   | content                         |
//! |---------|---------------------------------|
//! | 0..8    | magic `GMATv1\0\0`              |
//! | 8..12   | `u32` row count                 |
//! | 12..16  | `u32` column count              |
//! | 16..    | `rows·cols` `f64`, row-major    |

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use geomatch_core::{ModelInstance, ModelKind, ObservationPair, Permutation};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"GMATv1\0\0";
const HEADER_LEN: usize = 16;

pub fn encode_matrix(m: &DMatrix<f64>) -> Result<Vec<u8>> {
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::Format("too many rows".into()))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::Format("too many columns".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Format(format!(
            "{rows}x{cols} needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_matrix<W: Write>(mut w: W, m: &DMatrix<f64>) -> Result<()> {
    let bytes = encode_matrix(m)?;
    w.write_all(&bytes).map_err(|e| Error::io("<writer>", e))
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::io("<reader>", e))?;
    decode_matrix(&bytes)
}

pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    fs::write(path, encode_matrix(m)?).map_err(|e| Error::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

/// Plain CSV, one matrix row per line, no header.
pub fn write_matrix_csv<W: Write>(w: W, m: &DMatrix<f64>) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m.row_iter() {
        wr.write_record(row.iter().map(|v| v.to_string()))?;
    }
    wr.flush().map_err(|e| Error::io("<csv>", e))
}

pub fn save_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_matrix_csv(io::BufWriter::new(file), m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceManifest {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub seed: u64,
    pub truth: Permutation,
    pub kind: ModelKind,
}

pub const MANIFEST_FILE: &str = "manifest.json";
/// Latent and observed matrices stored in an instance directory.
pub const INSTANCE_FILES: [&str; 5] = ["x", "z", "y", "a", "b"];

/// Writes `manifest.json` plus `{x,z,y,a,b}.gmat` (and `.csv` copies when
/// `csv` is set) into `dir`, creating it if needed.
pub fn save_instance(
    dir: &Path,
    instance: &ModelInstance,
    obs: &ObservationPair,
    csv: bool,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = InstanceManifest {
        n: instance.n(),
        d: instance.d(),
        sigma: instance.sigma(),
        seed: instance.seed(),
        truth: instance.truth().clone(),
        kind: obs.kind,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))?;

    let matrices = [instance.x(), instance.z(), instance.y(), &obs.a, &obs.b];
    for (name, m) in INSTANCE_FILES.iter().zip(matrices) {
        save_matrix(&dir.join(format!("{name}.gmat")), m)?;
        if csv {
            save_matrix_csv(&dir.join(format!("{name}.csv")), m)?;
        }
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<InstanceManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
