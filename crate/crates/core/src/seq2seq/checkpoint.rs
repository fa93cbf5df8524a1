// SPDX-License-Identifier: MIT OR Apache-2.0

//! Checkpoint container.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header (config, vocabulary, step count, parameter names and shapes),
//! then every parameter as little-endian `f32` in header order. All
//! integers are little-endian.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::Scalar;
use crate::dataset::Vocabulary;
use crate::error::{Error, Result};

use super::{ModelConfig, Seq2Seq};

const MAGIC: &[u8; 8] = b"GPCKPT\r\n";
pub const CHECKPOINT_VERSION: u32 = 1;
const PREAMBLE: usize = 8 + 4 + 8;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab: String,
    step: usize,
    params: Vec<(String, [usize; 2])>,
}

/// Serialized checkpoint; parameters are stored as `f32`.
pub fn checkpoint_bytes<F: Scalar>(model: &Seq2Seq<F>) -> Vec<u8> {
    let header = Header {
        config: model.config().clone(),
        vocab: model.vocab().symbols().iter().collect(),
        step: model.step(),
        params: model.param_names().iter().zip(model.params()).map(|(n, p)| (n.clone(), [p.nrows(), p.ncols()])).collect(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let floats: usize = model.params().iter().map(Array2::len).sum();
    let mut out = Vec::with_capacity(PREAMBLE + header.len() + 4 * floats);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for p in model.params() {
        for x in p.iter() {
            out.extend_from_slice(&x.to_f32().expect("f32-representable").to_le_bytes());
        }
    }
    out
}

/// Hex SHA-256 of [`checkpoint_bytes`].
pub fn checkpoint_digest<F: Scalar>(model: &Seq2Seq<F>) -> String {
    hex::encode(Sha256::digest(checkpoint_bytes(model)))
}

pub fn save_checkpoint<F: Scalar>(model: &Seq2Seq<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Seq2Seq<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes)
}

fn parse_checkpoint(bytes: &[u8]) -> Result<Seq2Seq<f32>> {
    if bytes.len() < PREAMBLE {
        return Err(Error::CorruptFile("shorter than the fixed preamble".into()));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::CorruptFile("not a checkpoint (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { expected: CHECKPOINT_VERSION.to_string(), found: version.to_string() });
    }
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let body = &bytes[PREAMBLE..];
    if body.len() < header_len {
        return Err(Error::CorruptFile("truncated header".into()));
    }
    let header: Header =
        serde_json::from_slice(&body[..header_len]).map_err(|e| Error::CorruptFile(format!("unreadable header: {e}")))?;
    let mut blob = &body[header_len..];
    let expected: usize = header.params.iter().map(|(_, [r, c])| r * c * 4).sum();
    if blob.len() != expected {
        return Err(Error::CorruptFile(format!("parameter data is {} bytes, header describes {expected}", blob.len())));
    }
    let mut params = Vec::with_capacity(header.params.len());
    for (name, [rows, cols]) in header.params {
        let (chunk, rest) = blob.split_at(rows * cols * 4);
        blob = rest;
        let values: Vec<f32> = chunk.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
        let array = Array2::from_shape_vec((rows, cols), values).expect("length checked");
        params.push((name, array));
    }
    let vocab = Vocabulary::from_symbols(header.vocab.chars());
    Seq2Seq::from_parts(header.config, vocab, params, header.step)
}
