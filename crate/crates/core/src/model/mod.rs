//! Bag classifier: sentence/alias fusion, dot-product attention pooling,
//! entity-type concatenation, two dense layers with inverted dropout, and a
//! softmax output trained with cross-entropy.

mod backward;
mod forward;
mod params;

pub use backward::{backward, backward_into};
pub use forward::{
    attention_pool, cross_entropy, forward, forward_eval, predict, stable_softmax, ForwardCache, Mode, LOSS_EPSILON,
};
pub use params::{Gradients, Model, ModelParams, TensorRef, TENSOR_NAMES};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::side_info::SideInfoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Sigmoid,
}

impl Activation {
    pub const ALL: [Activation; 3] = [Activation::Tanh, Activation::Relu, Activation::Sigmoid];

    pub fn apply<T: crate::Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    /// Derivative given the pre-activation `x` and output `y`.
    pub fn derivative<T: crate::Scalar>(self, x: T, y: T) -> T {
        match self {
            Activation::Tanh => T::one() - y * y,
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => y * (T::one() - y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Architecture hyperparameters. `d_s` is the sentence-embedding width,
/// `d_a`/`d_t` the alias and entity-type embedding widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub d_s: usize,
    #[serde(default = "default_alias_dim")]
    pub d_a: usize,
    #[serde(default = "default_type_dim")]
    pub d_t: usize,
    pub u1: usize,
    pub a1: Activation,
    pub p1: f64,
    pub u2: usize,
    pub a2: Activation,
    pub p2: f64,
    pub n_rel: usize,
}

pub const DEFAULT_ALIAS_DIM: usize = 32;
pub const DEFAULT_TYPE_DIM: usize = 50;

fn default_alias_dim() -> usize {
    DEFAULT_ALIAS_DIM
}

fn default_type_dim() -> usize {
    DEFAULT_TYPE_DIM
}

impl ModelConfig {
    /// Width of a fused sentence representation.
    pub fn rep_dim(&self) -> usize {
        self.d_s + self.d_a
    }

    /// Width of the bag vector plus both entity-type vectors.
    pub fn input_dim(&self) -> usize {
        self.rep_dim() + 2 * self.d_t
    }

    /// Selected GDS architecture: 768 relu units (dropout 0.58), then 48
    /// relu units (dropout 0.37).
    pub fn gds_reference(d_s: usize, n_rel: usize) -> Self {
        Self {
            d_s,
            d_a: DEFAULT_ALIAS_DIM,
            d_t: DEFAULT_TYPE_DIM,
            u1: 768,
            a1: Activation::Relu,
            p1: 0.58,
            u2: 48,
            a2: Activation::Relu,
            p2: 0.37,
            n_rel,
        }
    }

    /// Selected Riedel architecture: 96 relu units (dropout 0.61), then 24
    /// relu units (dropout 0.73).
    pub fn riedel_reference(d_s: usize, n_rel: usize) -> Self {
        Self {
            d_s,
            d_a: DEFAULT_ALIAS_DIM,
            d_t: DEFAULT_TYPE_DIM,
            u1: 96,
            a1: Activation::Relu,
            p1: 0.61,
            u2: 24,
            a2: Activation::Relu,
            p2: 0.73,
            n_rel,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("d_s", self.d_s),
            ("d_a", self.d_a),
            ("d_t", self.d_t),
            ("u1", self.u1),
            ("u2", self.u2),
            ("n_rel", self.n_rel),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!("{name} must be at least 1")));
        }
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..1.0).contains(&p) {
                return Err(ModelError::InvalidConfig(format!("{name} must lie in [0, 1), got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("shape mismatch in {what}: expected {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("bag has no sentences")]
    EmptyBag,
    #[error("label {label} out of range for {n} classes")]
    BadLabel { label: usize, n: usize },
    #[error("forward cache does not belong to this bag/parameter set: {0}")]
    CacheMismatch(&'static str),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    SideInfo(#[from] SideInfoError),
}

pub(crate) fn shape_err(what: &'static str, expected: impl std::fmt::Debug, got: impl std::fmt::Debug) -> ModelError {
    ModelError::ShapeMismatch {
        what,
        expected: format!("{expected:?}"),
        got: format!("{got:?}"),
    }
}
