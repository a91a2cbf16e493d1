//! Bag-structured corpus: embedding files, vocabularies, bag records and
//! batching.
//!
//! A loaded [`BagDataset`] is immutable; the embedding matrix and vocabulary
//! are shared behind `Arc` so train/valid/test splits can reference one copy.

mod bags;
mod emb;
mod vocab;

pub use bags::{batches, load_bags, load_bags_matching, Bag, BagDataset, SentenceRec};
pub use emb::{parse_embedding_file, read_embedding_file, write_embedding_file, EmbeddingMatrix, EMB_MAGIC};
pub use vocab::{load_vocab, load_vocab_dir, NameIds, Vocab, NA, NO_ALIAS, NO_TYPE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("bad magic: expected \"EMB1\", found {0:?}")]
    BadMagic([u8; 4]),
    #[error("truncated input: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("embedding matrix must have at least one row and one column (got {rows}x{dim})")]
    EmptyMatrix { rows: usize, dim: usize },
    #[error("{extra} trailing bytes after embedding payload")]
    TrailingBytes { extra: usize },

    #[error("{file}: line 1 must be {expected:?}, found {found:?}")]
    MissingNull {
        file: &'static str,
        expected: &'static str,
        found: String,
    },
    #[error("{file}: duplicate name {name:?} on line {line}")]
    DuplicateName {
        file: &'static str,
        name: String,
        line: usize,
    },
    #[error("{file}: empty name on line {line}")]
    EmptyName { file: &'static str, line: usize },

    #[error("line {line}: unknown relation {rel}")]
    UnknownRelation { line: usize, rel: String },
    #[error("line {line}: unknown entity type {ty}")]
    UnknownType { line: usize, ty: String },
    #[error("line {line}: unknown alias id {alias}")]
    UnknownAlias { line: usize, alias: String },
    #[error("line {line}: bag has no sentences")]
    EmptyBag { line: usize },
    #[error("line {line}: embedding row {row} out of range (matrix has {rows} rows)")]
    BadEmbRow { line: usize, row: usize, rows: usize },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("dataset contains no bags")]
    EmptyDataset,
    #[error("alias matching failed on line {line}: {reason}")]
    AliasMatch { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;
