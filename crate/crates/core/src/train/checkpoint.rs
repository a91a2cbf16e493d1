//! BSD1 checkpoints: `"BSD1"`, u32 LE header length, UTF-8 JSON header, then
//! the tensor payloads at the offsets listed in the header manifest
//! (offsets are relative to the start of the payload).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::model::{ModelParams, TENSOR_NAMES};
use crate::scalar::Scalar;

use super::TrainConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BSD1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckpointError {
    #[error("bad magic: expected \"BSD1\", found {0:?}")]
    BadMagic(Vec<u8>),
    #[error("truncated checkpoint: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),
    #[error("unreadable header: {0}")]
    BadHeader(String),
    #[error("non-finite value in tensor {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabSizes {
    pub relations: usize,
    pub types: usize,
    pub aliases: usize,
}

impl VocabSizes {
    pub fn of(vocab: &crate::corpus::Vocab) -> Self {
        Self {
            relations: vocab.relations.len(),
            types: vocab.types.len(),
            aliases: vocab.aliases.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub vocab_sizes: VocabSizes,
    pub seed: u64,
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

fn default_dtype() -> String {
    f32::DTYPE.to_string()
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: TrainConfig,
    vocab_sizes: VocabSizes,
    tensors: Vec<TensorEntry>,
    seed: u64,
    valid_accuracy: f64,
    /// Payload scalar type; files without it hold 32-bit reals.
    #[serde(default = "default_dtype")]
    dtype: String,
}

/// Serializes `params` at their native width (`f32` params give the plain
/// 32-bit payload).
pub fn save_checkpoint<T: Scalar>(params: &ModelParams<T>, cfg: &TrainConfig, meta: &CheckpointMeta) -> Vec<u8> {
    let mut payload = Vec::with_capacity(params.param_count() * T::WIDTH);
    let mut tensors = Vec::new();
    for t in params.tensors() {
        let offset = payload.len();
        t.data.iter().for_each(|v| v.write_le(&mut payload));
        tensors.push(TensorEntry {
            name: t.name.to_string(),
            shape: t.shape.clone(),
            offset,
            len: payload.len() - offset,
        });
    }
    let header = Header {
        config: cfg.clone(),
        vocab_sizes: meta.vocab_sizes,
        tensors,
        seed: meta.seed,
        valid_accuracy: meta.valid_accuracy,
        dtype: T::DTYPE.to_string(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + payload.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&payload);
    out
}

fn decode<T: Scalar>(bytes: &[u8], dtype: &str) -> Vec<T> {
    match dtype {
        "f64" => bytes.chunks_exact(8).map(|c| T::lit(f64::read_le(c))).collect(),
        _ => bytes.chunks_exact(4).map(|c| T::from_f32_exact(f32::read_le(c))).collect(),
    }
}

pub fn load_checkpoint<T: Scalar>(
    bytes: &[u8],
) -> Result<(ModelParams<T>, TrainConfig, CheckpointMeta), CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic(bytes[..bytes.len().min(4)].to_vec()));
    }
    if bytes.len() < 8 {
        return Err(CheckpointError::Truncated {
            expected: 8,
            actual: bytes.len(),
        });
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let payload_start = 8 + header_len;
    if bytes.len() < payload_start {
        return Err(CheckpointError::Truncated {
            expected: payload_start,
            actual: bytes.len(),
        });
    }
    let header: Header =
        serde_json::from_slice(&bytes[8..payload_start]).map_err(|e| CheckpointError::BadHeader(e.to_string()))?;
    let width = match header.dtype.as_str() {
        "f32" => 4,
        "f64" => 8,
        other => return Err(CheckpointError::BadHeader(format!("unsupported dtype {other:?}"))),
    };
    let cfg = header.config;
    let sizes = header.vocab_sizes;
    if sizes.relations != cfg.model.n_rel {
        return Err(CheckpointError::ManifestMismatch(format!(
            "config has {} relations, vocabulary {}",
            cfg.model.n_rel, sizes.relations
        )));
    }
    let template = ModelParams::<T>::zeros(&cfg.model, sizes.aliases, sizes.types);
    if header.tensors.len() != TENSOR_NAMES.len() {
        return Err(CheckpointError::ManifestMismatch(format!(
            "expected {} tensors, manifest lists {}",
            TENSOR_NAMES.len(),
            header.tensors.len()
        )));
    }
    let payload = &bytes[payload_start..];
    let mut declared = 0usize;
    let mut decoded: Vec<Vec<T>> = Vec::with_capacity(TENSOR_NAMES.len());
    for (entry, want) in header.tensors.iter().zip(template.tensors().iter()) {
        if entry.name != want.name || entry.shape != want.shape {
            return Err(CheckpointError::ManifestMismatch(format!(
                "tensor {:?} {:?} where {:?} {:?} was expected",
                entry.name, entry.shape, want.name, want.shape
            )));
        }
        let n: usize = entry.shape.iter().product();
        if entry.len != n * width {
            return Err(CheckpointError::ManifestMismatch(format!(
                "tensor {} declares {} bytes for {} values of {} bytes",
                entry.name, entry.len, n, width
            )));
        }
        let end = entry.offset.checked_add(entry.len).ok_or_else(|| {
            CheckpointError::ManifestMismatch(format!("tensor {} offset overflows", entry.name))
        })?;
        if end > payload.len() {
            return Err(CheckpointError::Truncated {
                expected: payload_start + end,
                actual: bytes.len(),
            });
        }
        let values: Vec<T> = decode(&payload[entry.offset..end], &header.dtype);
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CheckpointError::NonFinite(entry.name.clone()));
        }
        declared += entry.len;
        decoded.push(values);
    }
    if declared != payload.len() {
        return Err(CheckpointError::ManifestMismatch(format!(
            "manifest covers {declared} payload bytes, file carries {}",
            payload.len()
        )));
    }
    let mut it = decoded.into_iter();
    let mut mat = |m: &Matrix<T>| Matrix::from_vec(m.rows(), m.cols(), it.next().unwrap()).unwrap();
    let alias_table = mat(&template.alias_table);
    let type_table = mat(&template.type_table);
    let query = it.next().unwrap();
    let w1 = Matrix::from_vec(template.w1.rows(), template.w1.cols(), it.next().unwrap()).unwrap();
    let b1 = it.next().unwrap();
    let w2 = Matrix::from_vec(template.w2.rows(), template.w2.cols(), it.next().unwrap()).unwrap();
    let b2 = it.next().unwrap();
    let w3 = Matrix::from_vec(template.w3.rows(), template.w3.cols(), it.next().unwrap()).unwrap();
    let b3 = it.next().unwrap();
    let params = ModelParams {
        alias_table,
        type_table,
        query,
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
    };
    let meta = CheckpointMeta {
        vocab_sizes: sizes,
        seed: header.seed,
        valid_accuracy: header.valid_accuracy,
    };
    Ok((params, cfg, meta))
}
