mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bagside::{EvalError, TrainError};
use clap::{Args, Parser, Subcommand};

use config::TrainFlags;

/// Bag-level relation extraction with entity side information.
#[derive(Debug, Parser)]
#[command(name = "bagside", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Base seed; every random phase derives its own stream from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run config; flags take precedence over its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (files go to stdout where applicable when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

/// Corpus location flags.
#[derive(Debug, Clone, Args)]
pub struct DataFlags {
    /// EMB1 sentence embeddings
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Directory holding relations.txt, types.txt and aliases.txt
    #[arg(long)]
    vocab_dir: Option<PathBuf>,
    /// EMB1 alias phrase table; sentences without `aliases` are matched against it
    #[arg(long)]
    alias_table: Option<PathBuf>,
    /// Cosine threshold for alias matching
    #[arg(long)]
    alias_threshold: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a bag file against its vocabulary and embeddings
    Validate {
        #[arg(long)]
        bags: PathBuf,
        #[command(flatten)]
        data: DataFlags,
    },
    /// Train one model; writes model.bsd and history.csv
    Train {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        flags: TrainFlags,
        /// Checkpoint payload precision
        #[arg(long, value_enum, default_value = "f32")]
        dtype: commands::Dtype,
    },
    /// Random hyperparameter search; writes trials.csv and best_config.json
    Tune {
        #[arg(long)]
        train: Option<PathBuf>,
        #[arg(long)]
        valid: Option<PathBuf>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[command(flatten)]
        data: DataFlags,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// P@N table under the one/two/all protocol
    Eval {
        #[command(flatten)]
        target: EvalTarget,
        #[arg(long, value_delimiter = ',', default_value = "one,two,all")]
        mode: Vec<bagside::EvalMode>,
        #[arg(long, value_delimiter = ',', default_value = "100,200,300")]
        n: Vec<usize>,
    },
    /// Precision/recall curve over every ranked triple
    PrCurve {
        #[command(flatten)]
        target: EvalTarget,
        #[arg(long, default_value = "all")]
        mode: bagside::EvalMode,
    },
    /// Most likely relation per bag
    Predict {
        #[command(flatten)]
        target: EvalTarget,
    },
}

#[derive(Debug, Clone, Args)]
pub struct EvalTarget {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Bags to score; defaults to the config's test_bags
    #[arg(long)]
    bags: Option<PathBuf>,
    #[command(flatten)]
    data: DataFlags,
}

const EXIT_INPUT: u8 = 2;
const EXIT_DIVERGED: u8 = 3;
const EXIT_INFEASIBLE: u8 = 4;
const EXIT_USAGE: u8 = 64;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(TrainError::Diverged { .. }) = cause.downcast_ref::<TrainError>() {
            return EXIT_DIVERGED;
        }
        if let Some(EvalError::NotEnoughTriples { .. } | EvalError::EmptyAfterFilter) = cause.downcast_ref::<EvalError>() {
            return EXIT_INFEASIBLE;
        }
    }
    EXIT_INPUT
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("BAGSIDE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("BAGSIDE_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { EXIT_USAGE } else { 0 });
        }
    };
    let result = init_threads().and_then(|()| commands::run(cli.common, cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
