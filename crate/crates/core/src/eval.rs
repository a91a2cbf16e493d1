//! Held-out evaluation: P@N under the One/Two/All sentence-subsampling
//! protocol, precision-recall curves, PR-AUC and bag accuracy.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Bag, BagDataset, EmbeddingMatrix};
use crate::model::{forward_eval, Model, ModelConfig, ModelError, ModelParams};
use crate::scalar::Scalar;

pub const DEFAULT_NS: [usize; 3] = [100, 200, 300];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("need at least {need} scored triples, have {have}")]
    NotEnoughTriples { need: usize, have: usize },
    #[error("no bag has more than two sentences")]
    EmptyAfterFilter,
    #[error("evaluated set has no positive (non-NA) bags")]
    NoPositives,
    #[error("precision-recall curve is empty")]
    EmptyCurve,
    #[error("precision-recall points are not ordered by recall")]
    UnorderedCurve,
    #[error("N must be at least 1")]
    ZeroN,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One (bag, non-NA relation) confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredTriple {
    pub bag_id: usize,
    pub rel: usize,
    pub score: f64,
    /// `rel` equals the bag's gold relation.
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Anything that yields a probability per relation for a bag.
pub trait BagScorer: Sync {
    fn score_bag(&self, bag: &Bag, emb: &EmbeddingMatrix) -> Result<Vec<f64>, ModelError>;
}

/// Borrowed parameters plus their architecture.
#[derive(Debug, Clone, Copy)]
pub struct ParamScorer<'a, T> {
    pub cfg: &'a ModelConfig,
    pub params: &'a ModelParams<T>,
}

impl<'a, T> ParamScorer<'a, T> {
    pub fn new(cfg: &'a ModelConfig, params: &'a ModelParams<T>) -> Self {
        Self { cfg, params }
    }
}

impl<T: Scalar> BagScorer for ParamScorer<'_, T> {
    fn score_bag(&self, bag: &Bag, emb: &EmbeddingMatrix) -> Result<Vec<f64>, ModelError> {
        let cache = forward_eval(bag, emb, self.params, self.cfg)?;
        Ok(cache.probs.iter().map(|p| p.as_f64()).collect())
    }
}

impl<T: Scalar> BagScorer for Model<T> {
    fn score_bag(&self, bag: &Bag, emb: &EmbeddingMatrix) -> Result<Vec<f64>, ModelError> {
        ParamScorer::new(&self.cfg, &self.params).score_bag(bag, emb)
    }
}

/// One eval-mode pass per bag; one triple per non-NA relation.
pub fn score_all(scorer: &impl BagScorer, bags: &BagDataset) -> Result<Vec<ScoredTriple>, EvalError> {
    let per_bag = bags
        .bags
        .par_iter()
        .enumerate()
        .map(|(bag_id, bag)| {
            let probs = scorer.score_bag(bag, &bags.embeddings)?;
            Ok(probs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(rel, &score)| ScoredTriple {
                    bag_id,
                    rel,
                    score,
                    correct: rel == bag.rel,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(per_bag.concat())
}

fn rank_order(a: &ScoredTriple, b: &ScoredTriple) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.bag_id.cmp(&b.bag_id))
        .then(a.rel.cmp(&b.rel))
}

/// Triples by descending score, ties by bag id then relation id.
pub fn ranked(triples: &[ScoredTriple]) -> Vec<ScoredTriple> {
    let mut out = triples.to_vec();
    out.sort_by(rank_order);
    out
}

pub fn precision_at_n(triples: &[ScoredTriple], n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroN);
    }
    if triples.len() < n {
        return Err(EvalError::NotEnoughTriples {
            need: n,
            have: triples.len(),
        });
    }
    let hits = ranked(triples)[..n].iter().filter(|t| t.correct).count();
    Ok(hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    One,
    Two,
    All,
}

impl EvalMode {
    pub const ALL_MODES: [EvalMode; 3] = [EvalMode::One, EvalMode::Two, EvalMode::All];

    pub fn name(self) -> &'static str {
        match self {
            EvalMode::One => "one",
            EvalMode::Two => "two",
            EvalMode::All => "all",
        }
    }

    fn keep(self) -> Option<usize> {
        match self {
            EvalMode::One => Some(1),
            EvalMode::Two => Some(2),
            EvalMode::All => None,
        }
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one" => Ok(EvalMode::One),
            "two" => Ok(EvalMode::Two),
            "all" => Ok(EvalMode::All),
            other => Err(format!("unknown mode {other:?} (expected one, two or all)")),
        }
    }
}

impl std::fmt::Display for EvalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `All` returns the dataset unchanged. `One`/`Two` keep only bags with more
/// than two sentences and draw 1 (resp. 2) of their sentences without
/// replacement.
pub fn subsample_protocol(bags: &BagDataset, mode: EvalMode, seed: u64) -> Result<BagDataset, EvalError> {
    let Some(keep) = mode.keep() else {
        return Ok(bags.clone());
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reduced: Vec<Bag> = bags
        .bags
        .iter()
        .filter(|b| b.sentences.len() > 2)
        .map(|b| {
            let picks = sample(&mut rng, b.sentences.len(), keep);
            Bag {
                sentences: picks.iter().map(|i| b.sentences[i].clone()).collect(),
                ..b.clone()
            }
        })
        .collect();
    if reduced.is_empty() {
        return Err(EvalError::EmptyAfterFilter);
    }
    Ok(bags.with_bags(reduced))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnCell {
    pub mode: EvalMode,
    pub n: usize,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnTable {
    pub cells: Vec<PnCell>,
}

impl PnTable {
    pub fn get(&self, mode: EvalMode, n: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.mode == mode && c.n == n)
            .map(|c| c.precision)
    }

    /// `mode,n,precision`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("mode,n,precision\n");
        for c in &self.cells {
            writeln!(out, "{},{},{}", c.mode, c.n, fmt_real(c.precision)).unwrap();
        }
        out
    }
}

/// P@{100,200,300} under One, Two and All.
pub fn pn_report(scorer: &impl BagScorer, bags: &BagDataset, seed: u64) -> Result<PnTable, EvalError> {
    pn_report_with(scorer, bags, seed, &EvalMode::ALL_MODES, &DEFAULT_NS)
}

pub fn pn_report_with(
    scorer: &impl BagScorer,
    bags: &BagDataset,
    seed: u64,
    modes: &[EvalMode],
    ns: &[usize],
) -> Result<PnTable, EvalError> {
    let mut cells = Vec::with_capacity(modes.len() * ns.len());
    for &mode in modes {
        let reduced = subsample_protocol(bags, mode, seed)?;
        let triples = score_all(scorer, &reduced)?;
        for &n in ns {
            cells.push(PnCell {
                mode,
                n,
                precision: precision_at_n(&triples, n)?,
            });
        }
    }
    Ok(PnTable { cells })
}

/// Non-NA gold facts in the set.
pub fn count_positives(bags: &BagDataset) -> usize {
    bags.bags.iter().filter(|b| b.rel != 0).count()
}

/// One point per ranked prefix.
pub fn pr_curve(triples: &[ScoredTriple], total_positives: usize) -> Result<Vec<PrPoint>, EvalError> {
    if total_positives == 0 {
        return Err(EvalError::NoPositives);
    }
    let mut hits = 0usize;
    Ok(ranked(triples)
        .iter()
        .enumerate()
        .map(|(k, t)| {
            hits += usize::from(t.correct);
            PrPoint {
                recall: hits as f64 / total_positives as f64,
                precision: hits as f64 / (k + 1) as f64,
            }
        })
        .collect())
}

/// Trapezoidal area over recall, starting from recall 0 at the first point's
/// precision.
pub fn auc(points: &[PrPoint]) -> Result<f64, EvalError> {
    let first = points.first().ok_or(EvalError::EmptyCurve)?;
    let mut prev = PrPoint {
        recall: 0.0,
        precision: first.precision,
    };
    let mut area = 0.0;
    for p in points {
        if p.recall < prev.recall {
            return Err(EvalError::UnorderedCurve);
        }
        area += (p.recall - prev.recall) * (p.precision + prev.precision) / 2.0;
        prev = *p;
    }
    Ok(area)
}

/// `recall,precision`
pub fn pr_csv(points: &[PrPoint]) -> String {
    let mut out = String::from("recall,precision\n");
    for p in points {
        writeln!(out, "{},{}", fmt_real(p.recall), fmt_real(p.precision)).unwrap();
    }
    out
}

/// 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Fraction of bags whose argmax relation (lowest id on ties) is the gold one.
pub fn bag_accuracy(scorer: &impl BagScorer, bags: &BagDataset) -> Result<f64, ModelError> {
    let hits = bags
        .bags
        .par_iter()
        .map(|bag| {
            let probs = scorer.score_bag(bag, &bags.embeddings)?;
            Ok(usize::from(argmax(&probs) == bag.rel))
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    Ok(hits.iter().sum::<usize>() as f64 / bags.len() as f64)
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
