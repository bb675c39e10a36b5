//! Binary model files: magic, length-prefixed JSON metadata, a count of
//! little-endian `f64` values, the values, then a SHA-256 of everything
//! before it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CnnModel, CnnShape, RunningStats};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 5] = b"TMDL1";
const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    shape: CnnShape,
    classes: Vec<String>,
    bank_hash: String,
    preset: String,
    run_config: Option<String>,
    param_count: usize,
}

pub fn encode_model(model: &CnnModel) -> Vec<u8> {
    let meta = Meta {
        format_version: FORMAT_VERSION,
        shape: model.shape.clone(),
        classes: model.classes.clone(),
        bank_hash: model.bank_hash.clone(),
        preset: model.preset.clone(),
        run_config: model.run_config.clone(),
        param_count: model.params.len(),
    };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");
    let mut values: Vec<f64> = model.params.clone();
    for rs in &model.running {
        values.extend(&rs.mean);
        values.extend(&rs.var);
    }
    values.extend(&model.norm_mean);
    values.extend(&model.norm_std);

    let mut out = Vec::with_capacity(5 + 4 + json.len() + 8 + 8 * values.len() + DIGEST_LEN);
    out.extend(MODEL_MAGIC);
    out.extend((json.len() as u32).to_le_bytes());
    out.extend(&json);
    out.extend((values.len() as u64).to_le_bytes());
    for v in values {
        out.extend(v.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend(digest.as_slice());
    out
}

fn take<'a>(buf: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if buf.len() < n {
        return Err(Error::Corrupt(format!("truncated {what}")));
    }
    let (head, rest) = buf.split_at(n);
    *buf = rest;
    Ok(head)
}

pub fn decode_model(bytes: &[u8]) -> Result<CnnModel> {
    if bytes.len() < MODEL_MAGIC.len() || &bytes[..MODEL_MAGIC.len()] != MODEL_MAGIC {
        return Err(Error::BadMagic { expected: "TMDL1" });
    }
    if bytes.len() < MODEL_MAGIC.len() + 4 + 8 + DIGEST_LEN {
        return Err(Error::Corrupt("model file too short".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Checksum);
    }
    let mut buf = &body[MODEL_MAGIC.len()..];
    let json_len = u32::from_le_bytes(take(&mut buf, 4, "header")?.try_into().unwrap()) as usize;
    let meta: Meta = serde_json::from_slice(take(&mut buf, json_len, "metadata")?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Version(meta.format_version));
    }
    meta.shape.validate()?;
    let count = u64::from_le_bytes(take(&mut buf, 8, "value count")?.try_into().unwrap()) as usize;
    if buf.len() != count * 8 {
        return Err(Error::Corrupt(format!(
            "expected {count} values, found {} bytes",
            buf.len()
        )));
    }
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut model = CnnModel::init(meta.shape, meta.classes, 0)?;
    let stats_len: usize = model.shape.stages.iter().map(|s| 2 * s.channels).sum();
    let d = model.shape.input_len;
    let expected = model.params.len() + stats_len + 2 * d;
    if meta.param_count != model.params.len() || count != expected {
        return Err(Error::Corrupt(format!(
            "value count {count} does not match the network shape ({expected})"
        )));
    }
    let mut rest = &values[..];
    let mut next = |n: usize| {
        let (a, b) = rest.split_at(n);
        rest = b;
        a.to_vec()
    };
    model.params = next(model.params.len());
    for l in 0..model.running.len() {
        let c = model.shape.stages[l].channels;
        model.running[l] = RunningStats {
            mean: next(c),
            var: next(c),
        };
    }
    model.norm_mean = next(d);
    model.norm_std = next(d);
    model.bank_hash = meta.bank_hash;
    model.preset = meta.preset;
    model.run_config = meta.run_config;
    Ok(model)
}

pub fn save_model(path: impl AsRef<Path>, model: &CnnModel) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel> {
    let path = path.as_ref();
    decode_model(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
