//! Synthetic corpora and tiny model instances shared by the integration
//! tests. The checked-in files under `tests/fixtures/` are produced by
//! [`write_fixture`]; `fixtures_are_current` guards against drift.
#![allow(dead_code)]

pub mod checks;
pub mod instances;
pub mod oracles;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use bagside::corpus::{load_bags, load_vocab, load_vocab_dir, read_embedding_file, write_embedding_file};
use bagside::model::{ModelConfig, ModelParams};
use bagside::{Activation, BagDataset, EmbeddingMatrix, Matrix, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// A corpus on disk: vocab files, one EMB1 matrix, and named JSONL splits.
pub struct Fixture {
    pub relations: String,
    pub types: String,
    pub aliases: String,
    pub embeddings: EmbeddingMatrix,
    pub splits: Vec<(&'static str, String)>,
}

impl Fixture {
    pub fn vocab(&self) -> Vocab {
        load_vocab(&self.relations, &self.types, &self.aliases).unwrap()
    }

    pub fn dataset(&self, split: &str) -> BagDataset {
        let text = &self.splits.iter().find(|(n, _)| *n == split).unwrap().1;
        load_bags(text, Arc::new(self.vocab()), Arc::new(self.embeddings.clone())).unwrap()
    }
}

pub fn write_fixture(dir: &Path, f: &Fixture) {
    std::fs::create_dir_all(dir).unwrap();
    std::fs::write(dir.join("relations.txt"), &f.relations).unwrap();
    std::fs::write(dir.join("types.txt"), &f.types).unwrap();
    std::fs::write(dir.join("aliases.txt"), &f.aliases).unwrap();
    std::fs::write(dir.join("embeddings.emb"), write_embedding_file(&f.embeddings)).unwrap();
    for (name, text) in &f.splits {
        std::fs::write(dir.join(format!("{name}.jsonl")), text).unwrap();
    }
}

/// Loads `split` of a checked-in fixture, sharing vocab and embeddings.
pub fn load_fixture(name: &str, splits: &[&str]) -> Vec<BagDataset> {
    let dir = fixtures_dir().join(name);
    let vocab = Arc::new(load_vocab_dir(&dir).unwrap());
    let emb = Arc::new(read_embedding_file(dir.join("embeddings.emb")).unwrap());
    splits
        .iter()
        .map(|s| {
            let text = std::fs::read_to_string(dir.join(format!("{s}.jsonl"))).unwrap();
            load_bags(&text, vocab.clone(), emb.clone()).unwrap()
        })
        .collect()
}

struct Builder {
    rng: ChaCha8Rng,
    rows: Vec<Vec<f32>>,
    dim: usize,
}

impl Builder {
    fn new(seed: u64, dim: usize) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            rows: Vec::new(),
            dim,
        }
    }

    fn sentence(&mut self, center: &[f32], noise: f32) -> usize {
        let row = (0..self.dim)
            .map(|k| center[k] + self.rng.gen_range(-noise..=noise))
            .collect();
        self.rows.push(row);
        self.rows.len() - 1
    }

    fn aliases(&mut self, n_aliases: usize) -> String {
        let k = self.rng.gen_range(0..3);
        let ids: Vec<String> = (0..k).map(|_| self.rng.gen_range(1..n_aliases).to_string()).collect();
        format!("[{}]", ids.join(","))
    }

    #[allow(clippy::too_many_arguments)]
    fn bag(&mut self, out: &mut String, idx: usize, rel: &str, center: &[f32], n_sent: usize, noise: f32, n_aliases: usize) {
        let sents: Vec<String> = (0..n_sent)
            .map(|_| {
                let row = self.sentence(center, noise);
                format!("{{\"emb\":{row},\"aliases\":{}}}", self.aliases(n_aliases))
            })
            .collect();
        let obj_types = if idx.is_multiple_of(3) { "[]" } else { "[\"location\"]" };
        writeln!(
            out,
            "{{\"sub\":\"e{idx}\",\"obj\":\"f{idx}\",\"rel\":\"{rel}\",\"sub_types\":[\"person\"],\"obj_types\":{obj_types},\"sentences\":[{}]}}",
            sents.join(",")
        )
        .unwrap();
    }

    fn matrix(self) -> EmbeddingMatrix {
        Matrix::from_rows(&self.rows).unwrap()
    }
}

const TYPES: &str = "NO_TYPE\nperson\nlocation\norganization\n";
const ALIASES: &str = "NO_ALIAS\nborn in\nnative of\nlived in\nresides in\n";

/// 40 bags, two relations, orthogonal embedding clusters, 1–4 sentences.
pub fn separable() -> Fixture {
    let mut b = Builder::new(40, 8);
    let na = [0.5f32, 0.5, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0];
    let pos = [0.0f32, 0.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5];
    let mut train = String::new();
    for i in 0..40 {
        let (rel, center) = if i % 2 == 0 { ("NA", &na) } else { ("place_of_birth", &pos) };
        b.bag(&mut train, i, rel, center, 1 + i % 4, 0.05, 5);
    }
    Fixture {
        relations: "NA\nplace_of_birth\n".into(),
        types: TYPES.into(),
        aliases: ALIASES.into(),
        embeddings: b.matrix(),
        splits: vec![("train", train)],
    }
}

const IMB_RELS: [&str; 4] = ["NA", "place_of_birth", "place_lived", "employed_by"];

fn imbalanced_split(b: &mut Builder, out: &mut String, n_na: usize, n_clear: usize, n_hard: usize, offset: usize) {
    let na = [1.0f32, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let center = |r: usize| {
        let mut c = [0.0f32; 8];
        c[r] = 1.0;
        c
    };
    let total = n_na + n_clear + n_hard;
    for i in 0..total {
        let idx = offset + i;
        let n_sent = 1 + b.rng.gen_range(0..5);
        // interleave so every region of the file mixes classes
        let slot = i % 10;
        let rel = 1 + i % 3;
        if slot == 0 && i / 10 < n_clear + n_hard {
            if (i / 10) < n_clear {
                b.bag(out, idx, IMB_RELS[rel], &center(rel), n_sent, 0.15, 5);
            } else {
                // distant-supervision noise: labelled positive, reads as NA
                b.bag(out, idx, IMB_RELS[rel], &na, n_sent, 0.15, 5);
            }
        } else {
            b.bag(out, idx, "NA", &na, n_sent, 0.15, 5);
        }
    }
}

/// 90 % NA. Positives are 65 % clearly separable and 35 % indistinguishable
/// from NA.
pub fn imbalanced() -> Fixture {
    let mut b = Builder::new(90, 8);
    let mut train = String::new();
    imbalanced_split(&mut b, &mut train, 900, 65, 35, 0);
    let mut valid = String::new();
    imbalanced_split(&mut b, &mut valid, 450, 33, 17, 10_000);
    let mut test = String::new();
    imbalanced_split(&mut b, &mut test, 1800, 130, 70, 20_000);
    Fixture {
        relations: IMB_RELS.join("\n") + "\n",
        types: TYPES.into(),
        aliases: ALIASES.into(),
        embeddings: b.matrix(),
        splits: vec![("train", train), ("valid", valid), ("test", test)],
    }
}

/// Random tiny architecture: every width ≤ 8, n_rel ≤ 4.
pub fn tiny_config<R: Rng>(rng: &mut R) -> ModelConfig {
    let act = |rng: &mut R| Activation::ALL[rng.gen_range(0..3)];
    ModelConfig {
        d_s: rng.gen_range(1..=6),
        d_a: rng.gen_range(1..=3),
        d_t: rng.gen_range(1..=3),
        u1: rng.gen_range(1..=8),
        a1: act(rng),
        p1: 0.0,
        u2: rng.gen_range(1..=8),
        a2: act(rng),
        p2: 0.0,
        n_rel: rng.gen_range(2..=4),
    }
}

/// A random bag and embedding matrix compatible with `cfg`, plus random
/// parameters in ±`scale`.
pub fn tiny_instance<R: Rng>(
    rng: &mut R,
    cfg: &ModelConfig,
    scale: f64,
) -> (bagside::Bag, EmbeddingMatrix, ModelParams<f64>) {
    let n_aliases = rng.gen_range(1..=4);
    let n_types = rng.gen_range(1..=4);
    let n_sent = rng.gen_range(1..=4);
    let emb_rows: Vec<Vec<f32>> = (0..n_sent + 1)
        .map(|_| (0..cfg.d_s).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
        .collect();
    let emb = Matrix::from_rows(&emb_rows).unwrap();
    let sentences = (0..n_sent)
        .map(|_| bagside::SentenceRec {
            emb_row: rng.gen_range(0..emb.rows()),
            alias_ids: (0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..n_aliases)).collect(),
            text: None,
        })
        .collect();
    let types = |rng: &mut R| (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(0..n_types)).collect();
    let bag = bagside::Bag {
        sub: "s".into(),
        obj: "o".into(),
        rel: rng.gen_range(0..cfg.n_rel),
        sub_types: types(rng),
        obj_types: types(rng),
        sentences,
    };
    let mut params = ModelParams::<f64>::zeros(cfg, n_aliases, n_types);
    for t in params.slices_mut() {
        t.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
    }
    (bag, emb, params)
}

/// Trains the small net used for the imbalance experiment and returns
/// `(P@100, PR-AUC)` on the imbalanced test split under mode `all`.
pub fn imbalance_experiment() -> (f64, f64) {
    imbalance_experiment_seeded(7)
}

pub fn imbalance_experiment_seeded(seed: u64) -> (f64, f64) {
    use bagside::eval::{auc, count_positives, pr_curve, precision_at_n, score_all, ParamScorer};
    use bagside::train::{train, OptimizerKind, TrainConfig};
    let mut splits = load_fixture("imbalanced", &["train", "valid", "test"]);
    let test = splits.pop().unwrap();
    let valid = splits.pop().unwrap();
    let train_set = splits.pop().unwrap();
    let cfg = TrainConfig {
        model: ModelConfig {
            d_s: 8,
            d_a: 4,
            d_t: 4,
            u1: 32,
            a1: Activation::Relu,
            p1: 0.1,
            u2: 16,
            a2: Activation::Relu,
            p2: 0.1,
            n_rel: 4,
        },
        optimizer: OptimizerKind::Nadam,
        lr: 0.01,
        batch_size: 32,
        max_epochs: 30,
        patience: 5,
        seed,
        ..TrainConfig::default()
    };
    let out = train::<f64>(&train_set, &valid, &cfg).unwrap();
    let triples = score_all(&ParamScorer::new(&cfg.model, &out.params), &test).unwrap();
    let p100 = precision_at_n(&triples, 100).unwrap();
    let area = auc(&pr_curve(&triples, count_positives(&test)).unwrap()).unwrap();
    (p100, area)
}
