//! Raw signal dumps: interleaved little-endian `f64` I/Q pairs in `<name>.iq`,
//! with a JSON sidecar `<name>.iq.json` holding `sample_rate`, `center_offset`
//! and `length`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::signal::BasebandSignal;
use crate::error::{PimError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub sample_rate: f64,
    pub center_offset: f64,
    pub length: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn io_err(path: &Path, e: std::io::Error) -> PimError {
    PimError::Io {
        path: path.display().to_string(),
        source: e,
    }
}

pub fn encode(sig: &BasebandSignal) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(sig.len() * 16);
    for v in &sig.samples {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    bytes
}

pub fn write_dump(path: &Path, sig: &BasebandSignal) -> Result<()> {
    let header = DumpHeader {
        sample_rate: sig.sample_rate,
        center_offset: sig.center_offset,
        length: sig.len(),
    };
    crate::harness::io::write_atomic(path, &encode(sig))?;
    let json = serde_json::to_vec_pretty(&header).map_err(|e| PimError::Parse(e.to_string()))?;
    crate::harness::io::write_atomic(&sidecar_path(path), &json)
}

pub fn read_dump(path: &Path) -> Result<BasebandSignal> {
    let side = sidecar_path(path);
    let header: DumpHeader = serde_json::from_slice(&fs::read(&side).map_err(|e| io_err(&side, e))?)
        .map_err(|e| PimError::Parse(format!("{}: {e}", side.display())))?;
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != header.length * 16 {
        return Err(PimError::dim(format!(
            "{} holds {} bytes, header says {} samples",
            path.display(),
            bytes.len(),
            header.length
        )));
    }
    let samples = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    BasebandSignal::new(samples, header.sample_rate, header.center_offset)
}
