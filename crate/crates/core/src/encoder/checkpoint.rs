use super::{parameter_layout, EncoderModel, ModelConfig, Tensor, Vocabulary};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

const MAGIC: &[u8; 8] = b"QULOGCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the payload.
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    vocabulary: Vec<String>,
    extra: serde_json::Value,
    params: Vec<Entry>,
}

/// Serializes a model.
///
/// Layout: 8-byte magic, `u32` version, `u64` header length (both
/// little-endian), the UTF-8 JSON header, then every parameter as
/// little-endian `f32` in manifest order. `extra` is stored verbatim in the
/// header for the caller's metadata.
pub fn write_checkpoint(model: &EncoderModel, extra: &serde_json::Value) -> Vec<u8> {
    let mut offset = 0;
    let params = model
        .param_names()
        .into_iter()
        .zip(model.params())
        .map(|(name, t)| {
            let e = Entry { name, shape: t.shape.clone(), offset };
            offset += 4 * t.len();
            e
        })
        .collect();
    let header = Header {
        format_version: CHECKPOINT_VERSION,
        config: model.config.clone(),
        vocabulary: model.vocab.tokens().to_vec(),
        extra: extra.clone(),
        params,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(20 + json.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for t in model.params() {
        for &x in &t.data {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<(EncoderModel, serde_json::Value)> {
    let bad = |m: String| Error::Checkpoint(m);
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(bad("missing magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version} (expected {CHECKPOINT_VERSION})")));
    }
    let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let body = &bytes[20..];
    if body.len() < hlen {
        return Err(bad(format!("header of {hlen} bytes is truncated")));
    }
    let header: Header = serde_json::from_slice(&body[..hlen]).map_err(|e| bad(format!("header: {e}")))?;
    if header.format_version != version {
        return Err(bad("header version disagrees with preamble".into()));
    }
    let payload = &body[hlen..];
    let vocab = Vocabulary::from_list(header.vocabulary)?;
    let layout = parameter_layout(&header.config, vocab.len());
    if layout.len() != header.params.len() {
        return Err(bad(format!("manifest lists {} tensors, config implies {}", header.params.len(), layout.len())));
    }
    let mut expected_offset = 0;
    let mut params = Vec::with_capacity(layout.len());
    for ((name, shape), e) in layout.iter().zip(&header.params) {
        if *name != e.name || *shape != e.shape {
            return Err(bad(format!("manifest entry {} {:?} does not match {name} {shape:?}", e.name, e.shape)));
        }
        if e.offset != expected_offset {
            return Err(bad(format!("{name}: offset {} != {expected_offset}", e.offset)));
        }
        let n: usize = shape.iter().product();
        let end = e.offset + 4 * n;
        if end > payload.len() {
            return Err(bad(format!("{name}: payload truncated")));
        }
        let data = payload[e.offset..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        params.push(Tensor { shape: shape.clone(), data });
        expected_offset = end;
    }
    if expected_offset != payload.len() {
        return Err(bad(format!("{} trailing payload bytes", payload.len() - expected_offset)));
    }
    let model = EncoderModel::from_parts(header.config, vocab, params)?;
    Ok((model, header.extra))
}

pub fn save_checkpoint(model: &EncoderModel, extra: &serde_json::Value, path: &Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(model, extra)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(EncoderModel, serde_json::Value)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
