//! Parameter initialisation, SGD/Nadam, the epoch loop with
//! validation-accuracy model selection, random hyperparameter search and
//! checkpoint persistence.

mod checkpoint;
mod init;
mod optim;
mod search;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError, CheckpointMeta, VocabSizes, CHECKPOINT_MAGIC};
pub use init::{glorot_bound, init_params, SIDE_TABLE_INIT};
pub use optim::{nadam_step, sgd_step, NadamConstants, NadamState, Optimizer, OptimizerKind};
pub use search::{random_search, trial_log_csv, tune, SearchOutcome, SearchSpace, TrialRecord};

use std::fmt::Write as _;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{batches, BagDataset};
use crate::eval::{bag_accuracy, ParamScorer};
use crate::model::{backward_into, cross_entropy, forward, Gradients, Mode, ModelConfig, ModelError, ModelParams};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// Bags per sequential gradient accumulator. Fixed so the reduction order,
/// and therefore the result, does not depend on the thread count.
const GRAD_CHUNK: usize = 4;

const SEED_INIT: u64 = 1;
const SEED_SHUFFLE: u64 = 2;
const SEED_DROPOUT: u64 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    #[serde(default = "defaults::batch_size")]
    pub batch_size: usize,
    #[serde(default = "defaults::max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "defaults::patience")]
    pub patience: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub nadam: NadamConstants,
}

mod defaults {
    pub fn batch_size() -> usize {
        32
    }
    pub fn max_epochs() -> usize {
        50
    }
    pub fn patience() -> usize {
        5
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::gds_reference(768, 5),
            optimizer: OptimizerKind::Sgd,
            lr: 0.58,
            batch_size: defaults::batch_size(),
            max_epochs: defaults::max_epochs(),
            patience: defaults::patience(),
            seed: 0,
            nadam: NadamConstants::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.model.validate()?;
        let bad = |msg: String| Err(TrainError::InvalidConfig(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs and patience must be at least 1".into());
        }
        let NadamConstants { beta1, beta2, eps } = self.nadam;
        if !(0.0 < beta1 && beta1 < 1.0 && 0.0 < beta2 && beta2 < 1.0 && eps > 0.0) {
            return bad("nadam constants need 0 < beta1, beta2 < 1 and eps > 0".into());
        }
        Ok(())
    }
}

/// A serialized checkpoint; `Debug` prints only its size.
#[derive(Clone, PartialEq, Eq)]
pub struct CheckpointBytes(pub Vec<u8>);

impl std::fmt::Debug for CheckpointBytes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CheckpointBytes({} bytes)", self.0.len())
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("train and valid splits must share one vocabulary and embedding width")]
    VocabMismatch,
    #[error("parameter and gradient shapes differ")]
    ShapeMismatch,
    #[error("training diverged (non-finite loss or parameters) at epoch {epoch}, batch {batch}")]
    Diverged {
        epoch: usize,
        batch: usize,
        /// Checkpoint of the parameters before the failing step.
        last_finite: CheckpointBytes,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the best validation accuracy.
    pub params: ModelParams<T>,
    pub best_epoch: usize,
    pub best_valid_accuracy: f64,
    pub history: Vec<EpochStats>,
}

/// `epoch,train_loss,valid_acc`
pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,valid_acc\n");
    for h in history {
        writeln!(
            out,
            "{},{},{}",
            h.epoch,
            crate::eval::fmt_real(h.train_loss),
            crate::eval::fmt_real(h.valid_accuracy)
        )
        .unwrap();
    }
    out
}

/// Mean gradient and summed loss over `bag_ids`. Each bag's dropout stream is
/// seeded by `bag_seed(bag_id)`.
pub fn batch_gradient<T: Scalar>(
    data: &BagDataset,
    bag_ids: &[usize],
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    bag_seed: impl Fn(usize) -> u64 + Sync,
) -> Result<(Gradients<T>, f64), ModelError> {
    let scale = T::one() / T::from_usize(bag_ids.len().max(1)).unwrap();
    let partials = bag_ids
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = params.zeros_like();
            let mut loss = 0.0;
            for &id in chunk {
                let bag = &data.bags[id];
                let mut rng = ChaCha8Rng::seed_from_u64(bag_seed(id));
                let cache = forward(bag, &data.embeddings, params, cfg, Mode::Train, &mut rng)?;
                loss += cross_entropy(&cache.probs, bag.rel)?.as_f64();
                backward_into(&cache, bag, bag.rel, params, cfg, scale, &mut grads)?;
            }
            Ok((grads, loss))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let mut total = params.zeros_like();
    let mut loss = 0.0;
    for (g, l) in &partials {
        total.add_scaled(T::one(), g);
        loss += l;
    }
    Ok((total, loss))
}

fn check_splits(train: &BagDataset, valid: &BagDataset, cfg: &ModelConfig) -> Result<(), TrainError> {
    let same_vocab = Arc::ptr_eq(&train.vocab, &valid.vocab) || train.vocab == valid.vocab;
    if !same_vocab || train.embeddings.cols() != valid.embeddings.cols() {
        return Err(TrainError::VocabMismatch);
    }
    if cfg.n_rel != train.vocab.relations.len() {
        return Err(TrainError::InvalidConfig(format!(
            "n_rel = {} but the vocabulary has {} relations",
            cfg.n_rel,
            train.vocab.relations.len()
        )));
    }
    if cfg.d_s != train.embeddings.cols() {
        return Err(TrainError::InvalidConfig(format!(
            "d_s = {} but embeddings have {} columns",
            cfg.d_s,
            train.embeddings.cols()
        )));
    }
    Ok(())
}

pub fn train<T: Scalar>(train: &BagDataset, valid: &BagDataset, cfg: &TrainConfig) -> Result<TrainOutcome<T>, TrainError> {
    cfg.validate()?;
    check_splits(train, valid, &cfg.model)?;
    let vocab = &train.vocab;
    let mut params = init_params::<T>(
        &cfg.model,
        vocab.aliases.len(),
        vocab.types.len(),
        derive_seed(cfg.seed, &[SEED_INIT]),
    );
    let mut optimizer = Optimizer::new(cfg.optimizer, &params, cfg.nadam);
    let lr = T::lit(cfg.lr);

    let mut history = Vec::new();
    let mut best: Option<(ModelParams<T>, usize, f64)> = None;
    let mut stale = 0;
    let mut last_acc = 0.0;

    for epoch in 0..cfg.max_epochs {
        let order = batches(train, cfg.batch_size, derive_seed(cfg.seed, &[SEED_SHUFFLE, epoch as u64]));
        let mut loss_sum = 0.0;
        for (bi, batch) in order.iter().enumerate() {
            let seed = cfg.seed;
            let (grads, loss) = batch_gradient(train, batch, &params, &cfg.model, |id| {
                derive_seed(seed, &[SEED_DROPOUT, epoch as u64, id as u64])
            })?;
            let diverged = |p: &ModelParams<T>| TrainError::Diverged {
                epoch,
                batch: bi,
                last_finite: CheckpointBytes(save_checkpoint(
                    p,
                    cfg,
                    &CheckpointMeta {
                        vocab_sizes: VocabSizes::of(vocab),
                        seed: cfg.seed,
                        valid_accuracy: last_acc,
                    },
                )),
            };
            if !loss.is_finite() || !grads.is_finite() {
                return Err(diverged(&params));
            }
            let before = params.clone();
            optimizer.step(&mut params, &grads, lr)?;
            if !params.is_finite() {
                return Err(diverged(&before));
            }
            loss_sum += loss;
        }

        let acc = bag_accuracy(&ParamScorer::new(&cfg.model, &params), valid)?;
        last_acc = acc;
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            valid_accuracy: acc,
        });
        match &best {
            Some((_, _, best_acc)) if acc <= *best_acc => {
                stale += 1;
                if stale >= cfg.patience {
                    break;
                }
            }
            _ => {
                best = Some((params.clone(), epoch, acc));
                stale = 0;
            }
        }
    }

    let (params, best_epoch, best_valid_accuracy) = best.expect("max_epochs >= 1");
    Ok(TrainOutcome {
        params,
        best_epoch,
        best_valid_accuracy,
        history,
    })
}
