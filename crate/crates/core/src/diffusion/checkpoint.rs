//! Checkpoint files: a magic line, one JSON header line, then the flat
//! parameter vector as little-endian f64.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{layout, ParamEntry, ToyConfig, ToyDenoiser};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::lightfield::ControlEncoding;

const MAGIC: &str = "FORGE-TOY-CKPT 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub step: u64,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub encoding: Option<ControlEncoding>,
    pub train: Option<TrainConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    config: ToyConfig,
    layout: Vec<ParamEntry>,
    n_params: usize,
    meta: CheckpointMeta,
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &ToyDenoiser, meta: &CheckpointMeta) -> Result<()> {
    let path = path.as_ref();
    let header = Header {
        config: model.config,
        layout: model.layout.clone(),
        n_params: model.n_params(),
        meta: meta.clone(),
    };
    let mut bytes = format!("{MAGIC}\n{}\n", serde_json::to_string(&header)?).into_bytes();
    bytes.reserve(model.params.len() * 8);
    for p in &model.params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ToyDenoiser, CheckpointMeta)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    let nl1 = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing magic line"))?;
    if &bytes[..nl1] != MAGIC.as_bytes() {
        return Err(bad("not a toy-model checkpoint"));
    }
    let rest = &bytes[nl1 + 1..];
    let nl2 = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header: Header = serde_json::from_slice(&rest[..nl2])?;
    if header.layout != layout(&header.config) {
        return Err(bad("layout does not match config"));
    }
    let blob = &rest[nl2 + 1..];
    if blob.len() != header.n_params * 8 {
        return Err(bad(&format!(
            "expected {} parameter bytes, found {}",
            header.n_params * 8,
            blob.len()
        )));
    }
    let params = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let model = ToyDenoiser::from_params(header.config, params)?;
    Ok((model, header.meta))
}
