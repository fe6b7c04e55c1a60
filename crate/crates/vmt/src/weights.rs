//! Refiner weight files.
//!
//! Layout: the magic bytes `VMTW`, a little-endian `u32` format version, a
//! little-endian `u32` header length, the UTF-8 JSON header, then every
//! tensor as little-endian `f32` in header order. The header records the
//! hyperparameters, each tensor's name, shape and offset, the architecture
//! choices this build implements, and the SHA-256 of the payload.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vmt_core::refine::{RefinerConfig, RefinerWeights};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"VMTW";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub node_encoder_input: String,
    pub low_level: String,
    pub positional_encoding: String,
    pub instance_guidance: String,
    pub pixel_decoder: String,
}

impl Architecture {
    /// The choices implemented by the forward pass of this build.
    pub fn current() -> Self {
        Self {
            node_encoder_input: "coarse 3x3 context, then low-level features at the cell".into(),
            low_level: "three 3x3 convolutions over RGB, or over the clipped signed distance of the coarse mask".into(),
            positional_encoding: "sinusoidal over (t, level, row * 2^level, col * 2^level)".into(),
            instance_guidance: "separate weights per layer".into(),
            pixel_decoder: "layer norm, kernel generated from the mean instance query, dot product plus bias".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into the payload, in `f32` elements.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub config: RefinerConfig,
    pub architecture: Architecture,
    pub tensors: Vec<TensorEntry>,
    pub payload_bytes: usize,
    /// Lowercase hex SHA-256 of the payload.
    pub sha256: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes `weights`. Identical weights give identical bytes.
pub fn encode(weights: &RefinerWeights) -> Result<Vec<u8>> {
    let mut payload = Vec::with_capacity(weights.parameter_count() * 4);
    let mut tensors = Vec::new();
    for t in weights.tensors() {
        tensors.push(TensorEntry { name: t.name, shape: t.shape, offset: payload.len() / 4 });
        for v in t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = Header {
        config: weights.config.clone(),
        architecture: Architecture::current(),
        tensors,
        payload_bytes: payload.len(),
        sha256: hex(&Sha256::digest(&payload)),
    };
    // shortest round-trip floats: the header must reproduce the config exactly
    let header = serde_json::to_string(&header)?;
    let mut out = Vec::with_capacity(12 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

fn bad(message: impl Into<String>) -> Error {
    Error::Weights(message.into())
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    let b: [u8; 4] = bytes.get(at..at + 4).and_then(|s| s.try_into().ok()).ok_or_else(|| bad("weight file is truncated"))?;
    Ok(u32::from_le_bytes(b))
}

/// Header of a weight file, without checking the payload.
pub fn read_header(bytes: &[u8]) -> Result<(Header, usize)> {
    if bytes.get(..4) != Some(MAGIC.as_slice()) {
        return Err(bad("not a weight file (bad magic)"));
    }
    let version = read_u32(bytes, 4)?;
    if version != VERSION {
        return Err(bad(format!("unsupported weight file version {version}")));
    }
    let len = read_u32(bytes, 8)? as usize;
    let raw = bytes.get(12..12 + len).ok_or_else(|| bad("weight file header is truncated"))?;
    let header: Header = serde_json::from_slice(raw).map_err(|e| bad(format!("weight file header: {e}")))?;
    Ok((header, 12 + len))
}

/// Parses and verifies a weight file: checksum, architecture and shapes.
pub fn decode(bytes: &[u8]) -> Result<RefinerWeights> {
    let (header, start) = read_header(bytes)?;
    let payload = &bytes[start..];
    if payload.len() != header.payload_bytes {
        return Err(bad(format!("payload holds {} bytes, header declares {}", payload.len(), header.payload_bytes)));
    }
    if hex(&Sha256::digest(payload)) != header.sha256 {
        return Err(bad("payload checksum mismatch"));
    }
    if header.architecture != Architecture::current() {
        return Err(bad("weight file was written for a different architecture"));
    }
    let floats: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4"))).collect();
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for t in &header.tensors {
        let n: usize = t.shape.iter().product();
        let data = floats.get(t.offset..t.offset + n).ok_or_else(|| bad(format!("tensor {} runs past the payload", t.name)))?;
        tensors.push((t.name.clone(), t.shape.clone(), data.to_vec()));
    }
    Ok(RefinerWeights::from_tensors(header.config, &tensors)?)
}

pub fn save(path: &Path, weights: &RefinerWeights) -> Result<()> {
    let bytes = encode(weights)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<RefinerWeights> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| e.in_file(path))
}
