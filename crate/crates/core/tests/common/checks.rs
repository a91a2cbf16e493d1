//! Whole-criterion checks returning a description of the first failure.

use bagside::corpus::{parse_embedding_file, write_embedding_file, CorpusError};
use bagside::eval::{bag_accuracy, ParamScorer};
use bagside::model::{ModelConfig, ModelParams};
use bagside::train::{
    init_params, load_checkpoint, save_checkpoint, train, CheckpointError, CheckpointMeta, OptimizerKind, TrainConfig,
    VocabSizes,
};
use bagside::{Activation, BagDataset, Matrix, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fixtures_dir, load_fixture};

pub fn overfit_config() -> TrainConfig {
    TrainConfig {
        model: ModelConfig {
            d_s: 8,
            d_a: 4,
            d_t: 4,
            u1: 16,
            a1: Activation::Relu,
            p1: 0.0,
            u2: 8,
            a2: Activation::Relu,
            p2: 0.0,
            n_rel: 2,
        },
        optimizer: OptimizerKind::Sgd,
        lr: 0.1,
        batch_size: 8,
        max_epochs: 200,
        patience: 200,
        seed: 17,
        ..TrainConfig::default()
    }
}

pub fn separable() -> BagDataset {
    load_fixture("separable", &["train"]).remove(0)
}

/// Trains twice on the separable fixture; returns the epoch count at which
/// train accuracy first hit 1.0.
pub fn check_overfit() -> Result<usize, String> {
    let data = separable();
    let cfg = overfit_config();
    let a = train::<f64>(&data, &data, &cfg).map_err(|e| e.to_string())?;
    let acc = bag_accuracy(&ParamScorer::new(&cfg.model, &a.params), &data).map_err(|e| e.to_string())?;
    if acc != 1.0 {
        return Err(format!("train accuracy {acc} after {} epochs", a.history.len()));
    }
    let first = a
        .history
        .iter()
        .position(|h| h.valid_accuracy == 1.0)
        .ok_or("history never reached 1.0")?;
    let b = train::<f64>(&data, &data, &cfg).map_err(|e| e.to_string())?;
    if a.params != b.params || a.history != b.history {
        return Err("rerun with the same seed differs".into());
    }
    Ok(first + 1)
}

fn round_trip<T: Scalar>(params: &ModelParams<T>, cfg: &TrainConfig, meta: &CheckpointMeta) -> Result<(), String> {
    let bytes = save_checkpoint(params, cfg, meta);
    let (back, back_cfg, back_meta) = load_checkpoint::<T>(&bytes).map_err(|e| e.to_string())?;
    let bits = |p: &ModelParams<T>| -> Vec<Vec<u8>> {
        p.tensors()
            .iter()
            .map(|t| {
                let mut out = Vec::new();
                t.data.iter().for_each(|v| v.write_le(&mut out));
                out
            })
            .collect()
    };
    if bits(&back) != bits(params) {
        return Err(format!("{} payload changed", T::DTYPE));
    }
    if back_cfg != *cfg || back_meta != *meta {
        return Err("header changed".into());
    }
    if save_checkpoint(&back, &back_cfg, &back_meta) != bytes {
        return Err("re-encoding differs".into());
    }
    Ok(())
}

/// The GDS and Riedel reference configs train one epoch on the separable fixture and their
/// checkpoints round-trip at 32 and 64 bits.
pub fn check_reference_configs() -> Result<(), String> {
    let data = separable();
    for (name, model, lr) in [
        ("gds", ModelConfig::gds_reference(8, 2), 0.58),
        ("riedel", ModelConfig::riedel_reference(8, 2), 0.65),
    ] {
        let cfg = TrainConfig {
            model,
            optimizer: OptimizerKind::Sgd,
            lr,
            max_epochs: 1,
            ..TrainConfig::default()
        };
        let out = train::<f64>(&data, &data, &cfg).map_err(|e| format!("{name}: {e}"))?;
        if out.history.len() != 1 || !out.params.is_finite() {
            return Err(format!("{name}: bad outcome"));
        }
        let meta = CheckpointMeta {
            vocab_sizes: VocabSizes::of(&data.vocab),
            seed: cfg.seed,
            valid_accuracy: out.best_valid_accuracy,
        };
        round_trip(&out.params, &cfg, &meta).map_err(|e| format!("{name}: {e}"))?;
        round_trip(&out.params.cast::<f32>(), &cfg, &meta).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(())
}

/// Re-encodes a checkpoint with its JSON header edited by `edit`.
pub fn edit_header(bytes: &[u8], edit: impl FnOnce(&mut serde_json::Value)) -> Vec<u8> {
    let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let mut header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + len]).unwrap();
    edit(&mut header);
    let text = serde_json::to_vec(&header).unwrap();
    let mut out = b"BSD1".to_vec();
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(&text);
    out.extend_from_slice(&bytes[8 + len..]);
    out
}

type HeaderEdit = Box<dyn Fn(&mut serde_json::Value)>;

pub fn check_format_suite() -> Result<(), String> {
    // EMB1: checked-in fixture and a random matrix with edge values
    for name in ["separable", "imbalanced"] {
        let raw = std::fs::read(fixtures_dir().join(name).join("embeddings.emb")).map_err(|e| e.to_string())?;
        let m = parse_embedding_file(&raw).map_err(|e| e.to_string())?;
        if write_embedding_file(&m) != raw {
            return Err(format!("EMB1 {name}: re-encoding differs"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut data: Vec<f32> = (0..7 * 13).map(|_| rng.gen_range(-1e3..1e3)).collect();
    data[..4].copy_from_slice(&[-0.0, f32::MIN_POSITIVE / 2.0, f32::MAX, f32::EPSILON]);
    let m = Matrix::from_vec(7, 13, data).unwrap();
    let bytes = write_embedding_file(&m);
    let back = parse_embedding_file(&bytes).map_err(|e| e.to_string())?;
    if back.shape() != m.shape() || back.as_slice().iter().zip(m.as_slice()).any(|(a, b)| a.to_bits() != b.to_bits()) {
        return Err("EMB1 random: values changed".into());
    }
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"EMB2");
    if !matches!(parse_embedding_file(&bad), Err(CorpusError::BadMagic(_))) {
        return Err("EMB1 bad magic not reported".into());
    }
    if !matches!(parse_embedding_file(&bytes[..bytes.len() - 1]), Err(CorpusError::Truncated { .. })) {
        return Err("EMB1 truncation not reported".into());
    }

    // BSD1
    let cfg = TrainConfig {
        model: ModelConfig::riedel_reference(8, 3),
        ..TrainConfig::default()
    };
    let params = init_params::<f64>(&cfg.model, 6, 4, 1);
    let meta = CheckpointMeta {
        vocab_sizes: VocabSizes { relations: 3, types: 4, aliases: 6 },
        seed: 1,
        valid_accuracy: 0.1 + 0.2,
    };
    round_trip(&params, &cfg, &meta)?;
    round_trip(&params.cast::<f32>(), &cfg, &meta)?;
    let bytes = save_checkpoint(&params.cast::<f32>(), &cfg, &meta);
    let mut bad = bytes.clone();
    bad[3] = b'2';
    if !matches!(load_checkpoint::<f32>(&bad), Err(CheckpointError::BadMagic(_))) {
        return Err("BSD1 bad magic not reported".into());
    }
    for cut in [2, 6, 20, bytes.len() - 1] {
        let err = load_checkpoint::<f32>(&bytes[..cut]);
        let ok = match cut {
            2 => matches!(err, Err(CheckpointError::BadMagic(_))),
            _ => matches!(err, Err(CheckpointError::Truncated { .. })),
        };
        if !ok {
            return Err(format!("BSD1 cut at {cut}: {err:?}"));
        }
    }
    let edits: [(&str, HeaderEdit); 4] = [
        ("shape", Box::new(|h| h["tensors"][3]["shape"][0] = 5.into())),
        ("name", Box::new(|h| h["tensors"][0]["name"] = "aliases".into())),
        ("missing", Box::new(|h| {
            h["tensors"].as_array_mut().unwrap().pop();
        })),
        ("len", Box::new(|h| h["tensors"][1]["len"] = 4.into())),
    ];
    for (what, edit) in edits {
        let bad = edit_header(&bytes, edit);
        match load_checkpoint::<f32>(&bad) {
            Err(CheckpointError::ManifestMismatch(_)) => {}
            other => return Err(format!("BSD1 {what} edit: {other:?}")),
        }
    }
    Ok(())
}
