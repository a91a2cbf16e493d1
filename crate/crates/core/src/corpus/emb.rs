//! EMB1: `"EMB1"`, u32 LE rows, u32 LE dim, then rows×dim f32 LE row-major.

use std::path::Path;

use super::{CorpusError, Result};
use crate::matrix::Matrix;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: usize = 12;

/// Frozen sentence (or alias phrase) vectors, stored at 32-bit precision.
pub type EmbeddingMatrix = Matrix<f32>;

pub fn parse_embedding_file(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != EMB_MAGIC {
            return Err(CorpusError::BadMagic(bytes[..4].try_into().unwrap()));
        }
        return Err(CorpusError::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if &magic != EMB_MAGIC {
        return Err(CorpusError::BadMagic(magic));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows == 0 || dim == 0 {
        return Err(CorpusError::EmptyMatrix { rows, dim });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = rows * dim * 4;
    if payload.len() < expected {
        return Err(CorpusError::Truncated {
            expected: HEADER_LEN + expected,
            actual: bytes.len(),
        });
    }
    if payload.len() > expected {
        return Err(CorpusError::TrailingBytes {
            extra: payload.len() - expected,
        });
    }
    let mut data = Vec::with_capacity(rows * dim);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(CorpusError::NonFinite {
                row: i / dim,
                col: i % dim,
            });
        }
        data.push(v);
    }
    Ok(Matrix::from_vec(rows, dim, data).expect("length checked above"))
}

pub fn write_embedding_file(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * 4);
    out.extend_from_slice(EMB_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    parse_embedding_file(&std::fs::read(path)?)
}
