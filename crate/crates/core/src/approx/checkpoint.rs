//! Parameter checkpoints: a little-endian `u64` header length, a JSON header,
//! then the flat parameter vector as little-endian `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, QApproximator};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub architecture: Architecture,
    pub seed: u64,
    pub step: u64,
    pub num_params: usize,
}

pub fn write_checkpoint(path: &Path, q: &QApproximator, seed: u64, step: u64) -> Result<()> {
    let header = CheckpointHeader {
        architecture: q.architecture(),
        seed,
        step,
        num_params: q.num_params(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(8 + json.len() + 8 * q.num_params());
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for p in q.params() {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<(QApproximator, CheckpointHeader)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |reason: &str| Error::Format {
        what: "checkpoint",
        reason: reason.to_string(),
    };
    if bytes.len() < 8 {
        return Err(bad("truncated header length"));
    }
    let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body = bytes
        .get(8..8 + header_len)
        .ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(body)?;
    let payload = &bytes[8 + header_len..];
    if payload.len() != 8 * header.num_params
        || header.num_params != header.architecture.num_params()
    {
        return Err(bad("parameter count does not match header"));
    }
    let params = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header.architecture.from_params(params), header))
}
