use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::BagDataset;
use crate::model::Activation;

use super::{train, OptimizerKind, TrainConfig, TrainError};

/// Hyperparameter search space; discrete fields are sampled uniformly from
/// their choice lists, dropout and learning rate from Uniform(0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub u1: Vec<usize>,
    pub u2: Vec<usize>,
    pub activations: Vec<Activation>,
    pub optimizers: Vec<OptimizerKind>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            u1: vec![48, 96, 192, 384, 768],
            u2: vec![6, 12, 24, 48],
            activations: Activation::ALL.to_vec(),
            optimizers: OptimizerKind::ALL.to_vec(),
        }
    }
}

impl SearchSpace {
    pub fn contains(&self, cfg: &TrainConfig) -> bool {
        let m = &cfg.model;
        self.u1.contains(&m.u1)
            && self.u2.contains(&m.u2)
            && self.activations.contains(&m.a1)
            && self.activations.contains(&m.a2)
            && self.optimizers.contains(&cfg.optimizer)
            && (0.0..1.0).contains(&m.p1)
            && (0.0..1.0).contains(&m.p2)
            && cfg.lr > 0.0
            && cfg.lr < 1.0
    }

    /// Draws one configuration on top of `base` (dims, epochs, batch size).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        cfg.model.u1 = *self.u1.choose(rng).expect("u1 choices");
        cfg.model.a1 = *self.activations.choose(rng).expect("activation choices");
        cfg.model.p1 = rng.gen::<f64>();
        cfg.model.u2 = *self.u2.choose(rng).expect("u2 choices");
        cfg.model.a2 = *self.activations.choose(rng).expect("activation choices");
        cfg.model.p2 = rng.gen::<f64>();
        cfg.optimizer = *self.optimizers.choose(rng).expect("optimizer choices");
        cfg.lr = loop {
            let lr = rng.gen::<f64>();
            if lr > 0.0 {
                break lr;
            }
        };
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub config: TrainConfig,
    pub valid_accuracy: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: TrainConfig,
    pub best_index: usize,
    pub trials: Vec<TrialRecord>,
}

/// Runs `trials` sampled configurations through `evaluate` (which returns a
/// validation accuracy). Trial `i` samples from, and trains with, seed
/// `seed + i`. A diverged trial scores 0; other errors abort the search.
/// Ties go to the earlier trial.
pub fn random_search<F>(
    space: &SearchSpace,
    trials: usize,
    base: &TrainConfig,
    seed: u64,
    evaluate: F,
) -> Result<SearchOutcome, TrainError>
where
    F: Fn(usize, &TrainConfig) -> Result<f64, TrainError> + Sync,
{
    if trials == 0 {
        return Err(TrainError::InvalidConfig("trials must be at least 1".into()));
    }
    let records = (0..trials)
        .into_par_iter()
        .map(|index| {
            let trial_seed = seed.wrapping_add(index as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let mut config = space.sample(&mut rng, base);
            config.seed = trial_seed;
            let (valid_accuracy, diverged) = match evaluate(index, &config) {
                Ok(acc) => (acc, false),
                Err(TrainError::Diverged { .. }) => (0.0, true),
                Err(e) => return Err(e),
            };
            Ok(TrialRecord {
                index,
                config,
                valid_accuracy,
                diverged,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let best = records
        .iter()
        .fold(&records[0], |best, r| if r.valid_accuracy > best.valid_accuracy { r } else { best });
    Ok(SearchOutcome {
        best: best.config.clone(),
        best_index: best.index,
        trials: records,
    })
}

/// Random search that trains each trial at 64-bit precision.
pub fn tune(
    space: &SearchSpace,
    trials: usize,
    train_set: &BagDataset,
    valid_set: &BagDataset,
    base: &TrainConfig,
    seed: u64,
) -> Result<SearchOutcome, TrainError> {
    random_search(space, trials, base, seed, |_, cfg| {
        train::<f64>(train_set, valid_set, cfg).map(|o| o.best_valid_accuracy)
    })
}

/// `trial,u1,a1,p1,u2,a2,p2,optimizer,lr,seed,valid_acc,status`
pub fn trial_log_csv(trials: &[TrialRecord]) -> String {
    let mut out = String::from("trial,u1,a1,p1,u2,a2,p2,optimizer,lr,seed,valid_acc,status\n");
    for t in trials {
        let m = &t.config.model;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            t.index,
            m.u1,
            m.a1,
            crate::eval::fmt_real(m.p1),
            m.u2,
            m.a2,
            crate::eval::fmt_real(m.p2),
            t.config.optimizer,
            crate::eval::fmt_real(t.config.lr),
            t.config.seed,
            crate::eval::fmt_real(t.valid_accuracy),
            if t.diverged { "diverged" } else { "ok" }
        )
        .unwrap();
    }
    out
}
