//! Relation-alias matching and the alias/entity-type side-information
//! vectors fused into sentence and bag representations.

use std::cmp::Ordering;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::{dot, Scalar};

/// One row per alias; row 0 is the learned `NO_ALIAS` vector.
pub type AliasTable<T> = Matrix<T>;
/// One row per entity type; row 0 is `NO_TYPE`.
pub type TypeTable<T> = Matrix<T>;

pub const DEFAULT_ALIAS_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SideInfoError {
    #[error("zero-norm vector")]
    ZeroVector,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("alias id {0} out of range")]
    BadAliasId(usize),
    #[error("type id {0} out of range")]
    BadTypeId(usize),
    #[error("entity has no type ids")]
    EmptyTypes,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T, SideInfoError> {
    if u.len() != v.len() {
        return Err(SideInfoError::DimMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return Err(SideInfoError::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Alias ids (never `NO_ALIAS`) whose row has cosine ≥ `threshold` with
/// `phrase`, most similar first, ties by ascending id. Zero-norm rows are
/// skipped.
pub fn match_aliases<T: Scalar>(
    phrase: &[T],
    table: &AliasTable<T>,
    threshold: T,
) -> Result<Vec<usize>, SideInfoError> {
    if phrase.len() != table.cols() {
        return Err(SideInfoError::DimMismatch {
            expected: table.cols(),
            got: phrase.len(),
        });
    }
    let pn = norm(phrase);
    if pn == T::zero() {
        return Err(SideInfoError::ZeroVector);
    }
    let mut hits: Vec<(usize, T)> = (1..table.rows())
        .filter_map(|i| {
            let row = table.row(i);
            let rn = norm(row);
            (rn != T::zero()).then(|| (i, dot(phrase, row) / (pn * rn)))
        })
        .filter(|&(_, sim)| sim >= threshold)
        .collect();
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
    Ok(hits.into_iter().map(|(i, _)| i).collect())
}

fn mean_rows<T: Scalar>(ids: &[usize], table: &Matrix<T>) -> Vec<T> {
    let mut out = vec![T::zero(); table.cols()];
    for &id in ids {
        for (o, &v) in out.iter_mut().zip(table.row(id)) {
            *o += v;
        }
    }
    let n = T::from_usize(ids.len()).unwrap();
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Mean of the matched alias rows; the `NO_ALIAS` row when nothing matched.
pub fn alias_vector<T: Scalar>(alias_ids: &[usize], table: &AliasTable<T>) -> Result<Vec<T>, SideInfoError> {
    if let Some(&bad) = alias_ids.iter().find(|&&id| id >= table.rows()) {
        return Err(SideInfoError::BadAliasId(bad));
    }
    if alias_ids.is_empty() {
        return Ok(table.row(0).to_vec());
    }
    Ok(mean_rows(alias_ids, table))
}

/// Mean of an entity's type rows.
pub fn type_vector<T: Scalar>(type_ids: &[usize], table: &TypeTable<T>) -> Result<Vec<T>, SideInfoError> {
    if type_ids.is_empty() {
        return Err(SideInfoError::EmptyTypes);
    }
    if let Some(&bad) = type_ids.iter().find(|&&id| id >= table.rows()) {
        return Err(SideInfoError::BadTypeId(bad));
    }
    Ok(mean_rows(type_ids, table))
}
