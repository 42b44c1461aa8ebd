//! On-disk tensor entry files.
//!
//! A tensor file is a UTF-8 JSON document with `order`, `dim` and a list of
//! `{idx, val}` entries, where `idx` is a sorted, 1-based multi-index.
//! Parsing then writing a file reproduces the same tensor.

use std::fs;
use std::path::Path;

use beigen::{unique_entry_count, SymTensor};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorFile {
    pub order: usize,
    pub dim: usize,
    pub entries: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub idx: Vec<usize>,
    pub val: f64,
}

pub fn parse_tensor_file(path: &Path) -> Result<SymTensor> {
    let text = fs::read_to_string(path)?;
    let file: TensorFile = serde_json::from_str(&text)?;
    tensor_from_file(&file)
}

pub fn tensor_from_file(file: &TensorFile) -> Result<SymTensor> {
    for entry in &file.entries {
        if !entry.val.is_finite() {
            return Err(CliError::Parse(format!(
                "non-finite value for idx {:?}",
                entry.idx
            )));
        }
        if entry.idx.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Parse(format!(
                "idx {:?} is not sorted non-decreasing",
                entry.idx
            )));
        }
    }
    Ok(SymTensor::dense_from_entries(
        file.order,
        file.dim,
        file.entries.iter().map(|e| (e.idx.clone(), e.val)),
    )?)
}

/// Serializes a tensor to the entry-file schema. Structured tensors are
/// expanded; an expansion above five million unique entries is refused.
pub fn write_tensor_file(tensor: &SymTensor, path: &Path) -> Result<()> {
    if unique_entry_count(tensor.order(), tensor.dim()) > 5_000_000 {
        return Err(CliError::Config(format!(
            "tensor of order {} and dimension {} is too large to expand into an entry file",
            tensor.order(),
            tensor.dim()
        )));
    }
    let file = TensorFile {
        order: tensor.order(),
        dim: tensor.dim(),
        entries: tensor
            .unique_entries()
            .map(|(idx, val)| TensorEntry { idx, val })
            .collect(),
    };
    fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}
