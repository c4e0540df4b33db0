//! Checkpoint format.
//!
//! Layout: the 8-byte magic `AQTCKPT1`, a little-endian `u64` header
//! length, a JSON header (format version, model configuration, training
//! options, provenance, tensor names and shapes in order), then each
//! tensor's row-major `f64` data little-endian in the listed order.
//! Raw bit patterns round-trip, so a save/load cycle reproduces
//! log-probabilities to the last ulp.

use super::{Parameters, TrainOptions, TransformerConfig, TransformerModel};
use crate::error::{AqtError, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"AQTCKPT1";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: TransformerConfig,
    train_options: Option<TrainOptions>,
    provenance: String,
    povm_name: String,
    tensors: Vec<TensorInfo>,
}

/// Header fields other than the tensors themselves.
#[derive(Clone, Debug)]
pub struct CheckpointMeta {
    pub config: TransformerConfig,
    pub train_options: Option<TrainOptions>,
    pub provenance: String,
    pub povm_name: String,
}

pub fn save_checkpoint(
    model: &TransformerModel,
    train_options: Option<&TrainOptions>,
    path: &Path,
) -> Result<()> {
    let names = model.params.tensor_names();
    let shapes = model.params.tensor_shapes();
    let header = Header {
        format_version: FORMAT_VERSION,
        config: model.config().clone(),
        train_options: train_options.cloned(),
        provenance: model.provenance.clone(),
        povm_name: model.povm_name.clone(),
        tensors: names
            .into_iter()
            .zip(shapes)
            .map(|(name, shape)| TensorInfo { name, shape })
            .collect(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| AqtError::Format(format!("header encode: {e}")))?;

    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for slice in model.params.flat_slices() {
        for x in slice {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(TransformerModel, CheckpointMeta)> {
    let file = std::fs::File::open(path)?;
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(AqtError::Format("not an AQTCKPT1 checkpoint".into()));
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 1 << 24 {
        return Err(AqtError::Format("implausible header length".into()));
    }
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| AqtError::Format(format!("header decode: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(AqtError::Format(format!(
            "unsupported checkpoint version {}",
            header.format_version
        )));
    }
    header.config.validate()?;

    let mut params = Parameters::zeros(&header.config);
    let expect_names = params.tensor_names();
    let expect_shapes = params.tensor_shapes();
    if header.tensors.len() != expect_names.len() {
        return Err(AqtError::Format(format!(
            "checkpoint lists {} tensors, config implies {}",
            header.tensors.len(),
            expect_names.len()
        )));
    }
    for (info, (name, shape)) in header
        .tensors
        .iter()
        .zip(expect_names.iter().zip(&expect_shapes))
    {
        if &info.name != name || &info.shape != shape {
            return Err(AqtError::Format(format!(
                "tensor mismatch: checkpoint has {} {:?}, config implies {} {:?}",
                info.name, info.shape, name, shape
            )));
        }
    }
    for slice in params.flat_slices_mut() {
        let mut buf = vec![0u8; slice.len() * 8];
        r.read_exact(&mut buf)?;
        for (i, x) in slice.iter_mut().enumerate() {
            *x = f64::from_le_bytes(buf[i * 8..(i + 1) * 8].try_into().unwrap());
        }
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(AqtError::Format("trailing bytes after tensor data".into()));
    }
    if !params.all_finite() {
        return Err(AqtError::Format("checkpoint contains non-finite values".into()));
    }

    let meta = CheckpointMeta {
        config: header.config.clone(),
        train_options: header.train_options,
        provenance: header.provenance.clone(),
        povm_name: header.povm_name.clone(),
    };
    let model = TransformerModel::from_parts(
        header.config,
        params,
        header.provenance,
        header.povm_name,
    );
    Ok((model, meta))
}
