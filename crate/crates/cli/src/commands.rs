use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use bagside::corpus::{load_bags, load_bags_matching, load_vocab_dir, read_embedding_file};
use bagside::eval::{auc, count_positives, fmt_real, pn_report_with, pr_csv, pr_curve, score_all, subsample_protocol};
use bagside::model::{predict, ModelParams};
use bagside::seed::derive_seed;
use bagside::side_info::DEFAULT_ALIAS_THRESHOLD;
use bagside::train::{
    history_csv, load_checkpoint, save_checkpoint, train, trial_log_csv, tune, CheckpointMeta, SearchSpace, VocabSizes,
};
use bagside::{BagDataset, EmbeddingMatrix, TrainConfig, TrainError, Vocab};
use rayon::prelude::*;

use crate::config::{required, train_config, RunConfig};
use crate::{Command, Common, DataFlags, EvalTarget};

/// Sub-seed phase for evaluation sampling.
const SEED_EVAL: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Dtype {
    F32,
    F64,
}

pub fn run(common: Common, command: Command) -> Result<()> {
    let file = RunConfig::load(common.config.as_deref())?;
    let seed = common.seed.or(file.seed).unwrap_or(0);
    let eval_seed = match (common.seed, file.eval_seed) {
        (None, Some(s)) => s,
        _ => derive_seed(seed, &[SEED_EVAL]),
    };
    let out = common.out.clone().or_else(|| file.out.clone());
    match command {
        Command::Validate { bags, data } => validate(&bags, &Corpus::load(&data, &file)?),
        Command::Train {
            train: train_path,
            valid,
            data,
            flags,
            dtype,
        } => {
            let corpus = Corpus::load(&data, &file)?;
            let train_set = corpus.bags(&required(&train_path, &file.train_bags, "train")?)?;
            let valid_set = corpus.bags(&required(&valid, &file.valid_bags, "valid")?)?;
            let cfg = train_config(&flags, &file, seed, corpus.emb.cols(), corpus.vocab.relations.len())?;
            let out = out_dir(out)?;
            run_train(&train_set, &valid_set, &cfg, &out, dtype)
        }
        Command::Tune {
            train: train_path,
            valid,
            trials,
            data,
            flags,
        } => {
            let corpus = Corpus::load(&data, &file)?;
            let train_set = corpus.bags(&required(&train_path, &file.train_bags, "train")?)?;
            let valid_set = corpus.bags(&required(&valid, &file.valid_bags, "valid")?)?;
            let base = train_config(&flags, &file, seed, corpus.emb.cols(), corpus.vocab.relations.len())?;
            let out = out_dir(out)?;
            let outcome = tune(&SearchSpace::default(), trials as usize, &train_set, &valid_set, &base, seed)?;
            write(&out.join("trials.csv"), trial_log_csv(&outcome.trials))?;
            let best = serde_json::to_string_pretty(&outcome.best)? + "\n";
            write(&out.join("best_config.json"), best)?;
            let record = &outcome.trials[outcome.best_index];
            eprintln!(
                "best trial {} valid_acc={}",
                outcome.best_index,
                fmt_real(record.valid_accuracy)
            );
            Ok(())
        }
        Command::Eval { target, mode, n } => {
            let (loaded, ds) = Loaded::open(&target, &file)?;
            if n.contains(&0) {
                bail!("--n values must be at least 1");
            }
            let table = pn_report_with(&loaded.scorer(), &ds, eval_seed, &mode, &n)?;
            emit(out.as_deref(), "pn.csv", &table.to_csv())
        }
        Command::PrCurve { target, mode } => {
            let (loaded, ds) = Loaded::open(&target, &file)?;
            let reduced = subsample_protocol(&ds, mode, eval_seed)?;
            let triples = score_all(&loaded.scorer(), &reduced)?;
            let curve = pr_curve(&triples, count_positives(&reduced))?;
            eprintln!("auc={}", fmt_real(auc(&curve)?));
            emit(out.as_deref(), "pr.csv", &pr_csv(&curve))
        }
        Command::Predict { target } => {
            let (loaded, ds) = Loaded::open(&target, &file)?;
            emit(out.as_deref(), "predictions.csv", &predictions(&loaded, &ds)?)
        }
    }
}

struct Corpus {
    vocab: Arc<Vocab>,
    emb: Arc<EmbeddingMatrix>,
    phrases: Option<EmbeddingMatrix>,
    threshold: f64,
}

impl Corpus {
    fn load(flags: &DataFlags, file: &RunConfig) -> Result<Self> {
        let emb_path = required(&flags.embeddings, &file.embeddings, "embeddings")?;
        let vocab_dir = required(&flags.vocab_dir, &file.vocab_dir, "vocab-dir")?;
        let vocab = load_vocab_dir(&vocab_dir).with_context(|| format!("vocabulary in {}", vocab_dir.display()))?;
        let emb = read_embedding_file(&emb_path).with_context(|| format!("embeddings {}", emb_path.display()))?;
        let phrases = match flags.alias_table.as_ref().or(file.alias_table.as_ref()) {
            Some(p) => Some(read_embedding_file(p).with_context(|| format!("alias table {}", p.display()))?),
            None => None,
        };
        let threshold = flags
            .alias_threshold
            .or(file.alias_threshold)
            .unwrap_or(DEFAULT_ALIAS_THRESHOLD);
        if !(-1.0..=1.0).contains(&threshold) {
            bail!("alias threshold must lie in [-1, 1], got {threshold}");
        }
        Ok(Self {
            vocab: Arc::new(vocab),
            emb: Arc::new(emb),
            phrases,
            threshold,
        })
    }

    fn bags(&self, path: &Path) -> Result<BagDataset> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let ds = match &self.phrases {
            Some(p) => load_bags_matching(&text, self.vocab.clone(), self.emb.clone(), p, self.threshold),
            None => load_bags(&text, self.vocab.clone(), self.emb.clone()),
        };
        ds.with_context(|| format!("{}", path.display()))
    }
}

fn validate(path: &Path, corpus: &Corpus) -> Result<()> {
    let ds = corpus.bags(path)?;
    let mut report = format!("bags={} sentences={}\n", ds.len(), ds.sentence_count());
    for (id, count) in ds.relation_histogram().into_iter().enumerate() {
        writeln!(report, "{}\t{count}", corpus.vocab.relations.name(id).unwrap_or("?"))?;
    }
    print!("{report}");
    Ok(())
}

fn out_dir(out: Option<PathBuf>) -> Result<PathBuf> {
    let Some(dir) = out else {
        bail!("--out is required for this command");
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes `name` under `out`, or to stdout without one.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(&dir.join(name), text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_train(train_set: &BagDataset, valid_set: &BagDataset, cfg: &TrainConfig, out: &Path, dtype: Dtype) -> Result<()> {
    let outcome = match train::<f64>(train_set, valid_set, cfg) {
        Ok(o) => o,
        Err(TrainError::Diverged {
            epoch,
            batch,
            last_finite,
        }) => {
            write(&out.join("last_finite.bsd"), &last_finite.0)?;
            return Err(TrainError::Diverged {
                epoch,
                batch,
                last_finite,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    let meta = CheckpointMeta {
        vocab_sizes: VocabSizes::of(&train_set.vocab),
        seed: cfg.seed,
        valid_accuracy: outcome.best_valid_accuracy,
    };
    let bytes = match dtype {
        Dtype::F32 => save_checkpoint(&outcome.params.cast::<f32>(), cfg, &meta),
        Dtype::F64 => save_checkpoint(&outcome.params, cfg, &meta),
    };
    write(&out.join("model.bsd"), bytes)?;
    write(&out.join("history.csv"), history_csv(&outcome.history))?;
    eprintln!(
        "best epoch {} valid_acc={}",
        outcome.best_epoch,
        fmt_real(outcome.best_valid_accuracy)
    );
    Ok(())
}

/// A checkpoint checked against the corpus it will score.
struct Loaded {
    cfg: TrainConfig,
    params: ModelParams<f64>,
}

impl Loaded {
    fn open(target: &EvalTarget, file: &RunConfig) -> Result<(Self, BagDataset)> {
        let bytes = std::fs::read(&target.checkpoint).with_context(|| format!("reading {}", target.checkpoint.display()))?;
        let (params, cfg, meta) =
            load_checkpoint::<f64>(&bytes).with_context(|| format!("checkpoint {}", target.checkpoint.display()))?;
        let corpus = Corpus::load(&target.data, file)?;
        let sizes = VocabSizes::of(&corpus.vocab);
        if sizes != meta.vocab_sizes {
            bail!(
                "checkpoint was trained on vocabulary sizes {:?}, corpus has {:?}",
                meta.vocab_sizes,
                sizes
            );
        }
        if cfg.model.d_s != corpus.emb.cols() {
            bail!(
                "checkpoint expects {}-dim sentence embeddings, file has {}",
                cfg.model.d_s,
                corpus.emb.cols()
            );
        }
        let ds = corpus.bags(&required(&target.bags, &file.test_bags, "bags")?)?;
        Ok((Self { cfg, params }, ds))
    }

    fn scorer(&self) -> bagside::eval::ParamScorer<'_, f64> {
        bagside::eval::ParamScorer::new(&self.cfg.model, &self.params)
    }
}

/// `bag,sub,obj,gold,predicted,probability`
fn predictions(loaded: &Loaded, ds: &BagDataset) -> Result<String> {
    let rows = ds
        .bags
        .par_iter()
        .map(|bag| predict(bag, &ds.embeddings, &loaded.params, &loaded.cfg.model))
        .collect::<Result<Vec<_>, _>>()?;
    let names = &ds.vocab.relations;
    let mut out = String::from("bag,sub,obj,gold,predicted,probability\n");
    for (i, (bag, (pred, probs))) in ds.bags.iter().zip(rows).enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{}",
            csv_field(&bag.sub),
            csv_field(&bag.obj),
            csv_field(names.name(bag.rel).unwrap_or("?")),
            csv_field(names.name(pred).unwrap_or("?")),
            fmt_real(probs[pred])
        )?;
    }
    Ok(out)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

