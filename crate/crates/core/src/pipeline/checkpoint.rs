//! Single-file model archives: a version header line followed by JSON.

use std::fs;
use std::path::Path;

use super::train::TrainedModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &str = "SENTIKIT-CHECKPOINT";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn checkpoint_to_string(model: &TrainedModel) -> Result<String> {
    let body = serde_json::to_string(model).map_err(|e| Error::State(format!("serializing model: {e}")))?;
    Ok(format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}\n{body}\n"))
}

pub fn checkpoint_from_str(text: &str, path: &Path) -> Result<TrainedModel> {
    let (header, body) = text
        .split_once('\n')
        .ok_or_else(|| Error::format(path, "missing checkpoint header"))?;
    let version = header
        .strip_prefix(CHECKPOINT_MAGIC)
        .map(str::trim)
        .ok_or_else(|| Error::format(path, "not a checkpoint file"))?;
    let version: u32 = version
        .parse()
        .map_err(|_| Error::format(path, format!("bad checkpoint version {version:?}")))?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            path,
            format!("checkpoint version {version} is not supported (expected {CHECKPOINT_VERSION})"),
        ));
    }
    let model: TrainedModel =
        serde_json::from_str(body).map_err(|e| Error::format(path, format!("corrupt checkpoint: {e}")))?;
    validate(&model).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(model)
}

/// Every parameter must hold as many values as its shape implies.
fn validate(model: &TrainedModel) -> Result<()> {
    for (i, t) in model.net.store.tensors().iter().enumerate() {
        if t.values().len() != t.shape().iter().product::<usize>() {
            return Err(Error::State(format!("parameter {i} does not match its shape {:?}", t.shape())));
        }
    }
    if model.net.store.is_empty() {
        return Err(Error::State("checkpoint holds no parameters".into()));
    }
    Ok(())
}

pub fn checkpoint_save(model: &TrainedModel, path: &Path) -> Result<()> {
    let text = checkpoint_to_string(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn checkpoint_load(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text, path)
}
