//! Distantly-supervised relation extraction over bags of sentences.
//!
//! Each bag (all sentences mentioning one entity pair) is classified into a
//! relation. Sentences arrive as precomputed embeddings and are fused with
//! matched relation-alias embeddings, pooled by attention, concatenated with
//! entity-type embeddings and fed through two dense layers and a softmax.
//!
//! The numerical core is generic over [`Scalar`] (`f64` reference path,
//! `f32` fast path); the aliases below pick the width.

pub mod corpus;
pub mod eval;
pub mod matrix;
pub mod model;
pub mod scalar;
pub mod seed;
pub mod side_info;
pub mod train;

pub use corpus::{Bag, BagDataset, CorpusError, EmbeddingMatrix, SentenceRec, Vocab};
pub use eval::{BagScorer, EvalError, EvalMode, PrPoint, ScoredTriple};
pub use matrix::Matrix;
pub use model::{Activation, ModelConfig, ModelError};
pub use scalar::Scalar;
pub use side_info::SideInfoError;
pub use train::{CheckpointError, OptimizerKind, TrainConfig, TrainError};

/// 64-bit parameters (reference precision).
pub type Params = model::ModelParams<f64>;
/// 32-bit parameters.
pub type Params32 = model::ModelParams<f32>;
pub type Grads = model::Gradients<f64>;
pub type Model = model::Model<f64>;
pub type Model32 = model::Model<f32>;
pub type ForwardCache = model::ForwardCache<f64>;
pub type NadamState = train::NadamState<f64>;
pub type TrainOutcome = train::TrainOutcome<f64>;
