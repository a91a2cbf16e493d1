//! The JSON run config and its merge with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bagside::model::ModelConfig;
use bagside::train::NadamConstants;
use bagside::{OptimizerKind, TrainConfig};
use serde::Deserialize;

/// Every key is optional; flags win over file values, which win over
/// defaults. A `best_config.json` written by `tune` is itself a valid file.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub train_bags: Option<PathBuf>,
    pub valid_bags: Option<PathBuf>,
    pub test_bags: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub vocab_dir: Option<PathBuf>,
    pub alias_table: Option<PathBuf>,
    pub alias_threshold: Option<f64>,
    pub model: Option<ModelConfig>,
    pub optimizer: Option<OptimizerKind>,
    pub lr: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub nadam: Option<NadamConstants>,
    pub seed: Option<u64>,
    pub eval_seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        for p in [
            &cfg.train_bags,
            &cfg.valid_bags,
            &cfg.test_bags,
            &cfg.embeddings,
            &cfg.vocab_dir,
            &cfg.alias_table,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                bail!("config {} names a missing path {}", path.display(), p.display());
            }
        }
        Ok(cfg)
    }
}

/// `flag`, else the file value, else an error naming the flag.
pub fn required<T: Clone>(flag: &Option<T>, file: &Option<T>, name: &str) -> Result<T> {
    match flag.as_ref().or(file.as_ref()) {
        Some(v) => Ok(v.clone()),
        None => bail!("--{name} is required (flag or config file)"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Gds,
    Riedel,
}

/// Training flags shared by `train` and `tune`.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct TrainFlags {
    /// Reference architecture used when the config has no `model`
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
}

/// Builds the training config. `d_s` and `n_rel` come from the data and
/// override whatever the file says.
pub fn train_config(flags: &TrainFlags, file: &RunConfig, seed: u64, d_s: usize, n_rel: usize) -> Result<TrainConfig> {
    let preset = flags.preset.unwrap_or(Preset::Gds);
    let mut model = match (flags.preset, file.model.clone()) {
        (None, Some(m)) => m,
        _ => match preset {
            Preset::Gds => ModelConfig::gds_reference(d_s, n_rel),
            Preset::Riedel => ModelConfig::riedel_reference(d_s, n_rel),
        },
    };
    model.d_s = d_s;
    model.n_rel = n_rel;
    let preset_lr = match preset {
        Preset::Gds => 0.58,
        Preset::Riedel => 0.65,
    };
    let base = TrainConfig::default();
    let cfg = TrainConfig {
        model,
        optimizer: flags.optimizer.or(file.optimizer).unwrap_or(OptimizerKind::Sgd),
        lr: flags.lr.or(file.lr).unwrap_or(preset_lr),
        batch_size: flags.batch_size.or(file.batch_size).unwrap_or(base.batch_size),
        max_epochs: flags.max_epochs.or(file.max_epochs).unwrap_or(base.max_epochs),
        patience: flags.patience.or(file.patience).unwrap_or(base.patience),
        seed,
        nadam: file.nadam.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}
