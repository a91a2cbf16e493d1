use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use super::{CorpusError, EmbeddingMatrix, Result, Vocab};
use crate::side_info::match_aliases;

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRec {
    pub emb_row: usize,
    pub alias_ids: Vec<usize>,
    pub text: Option<String>,
}

/// One entity pair with its gold relation and supporting sentences.
#[derive(Debug, Clone, PartialEq)]
pub struct Bag {
    pub sub: String,
    pub obj: String,
    pub rel: usize,
    pub sub_types: Vec<usize>,
    pub obj_types: Vec<usize>,
    pub sentences: Vec<SentenceRec>,
}

impl Bag {
    /// Checks every bag invariant against `vocab` and `emb`.
    pub fn is_valid(&self, vocab: &Vocab, emb: &EmbeddingMatrix) -> bool {
        !self.sentences.is_empty()
            && self.rel < vocab.relations.len()
            && !self.sub_types.is_empty()
            && !self.obj_types.is_empty()
            && self
                .sub_types
                .iter()
                .chain(&self.obj_types)
                .all(|&t| t < vocab.types.len())
            && self.sentences.iter().all(|s| {
                s.emb_row < emb.rows() && s.alias_ids.iter().all(|&a| a < vocab.aliases.len())
            })
    }
}

#[derive(Debug, Clone)]
pub struct BagDataset {
    pub bags: Vec<Bag>,
    pub embeddings: Arc<EmbeddingMatrix>,
    pub vocab: Arc<Vocab>,
}

impl BagDataset {
    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn sentence_count(&self) -> usize {
        self.bags.iter().map(|b| b.sentences.len()).sum()
    }

    /// Bag count per relation id.
    pub fn relation_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.vocab.relations.len()];
        for b in &self.bags {
            hist[b.rel] += 1;
        }
        hist
    }

    /// Same bags, different members; shares embeddings and vocab.
    pub fn with_bags(&self, bags: Vec<Bag>) -> Self {
        Self {
            bags,
            embeddings: Arc::clone(&self.embeddings),
            vocab: Arc::clone(&self.vocab),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Label {
    Id(u64),
    Name(String),
}

impl Label {
    fn describe(&self) -> String {
        match self {
            Label::Id(i) => i.to_string(),
            Label::Name(n) => format!("{n:?}"),
        }
    }
}

#[derive(Deserialize)]
struct RawSentence {
    emb: u64,
    aliases: Option<Vec<u64>>,
    text: Option<String>,
}

#[derive(Deserialize)]
struct RawBag {
    sub: String,
    obj: String,
    rel: Label,
    sub_types: Vec<Label>,
    obj_types: Vec<Label>,
    sentences: Vec<RawSentence>,
}

fn resolve(label: &Label, table: &super::NameIds) -> Option<usize> {
    match label {
        Label::Id(i) => usize::try_from(*i).ok().filter(|&i| i < table.len()),
        Label::Name(n) => table.id(n),
    }
}

struct Phrases<'a> {
    table: &'a EmbeddingMatrix,
    threshold: f64,
}

/// Parses a bags JSON Lines document. Sentences without an `aliases` key get
/// an empty alias list.
pub fn load_bags(text: &str, vocab: Arc<Vocab>, emb: Arc<EmbeddingMatrix>) -> Result<BagDataset> {
    load(text, vocab, emb, None)
}

/// Like [`load_bags`], but sentences lacking an `aliases` key are matched
/// against `phrases` (one row per alias, aligned with `aliases.txt`) using
/// the sentence embedding and cosine `threshold`. Records that already carry
/// alias ids are taken verbatim.
pub fn load_bags_matching(
    text: &str,
    vocab: Arc<Vocab>,
    emb: Arc<EmbeddingMatrix>,
    phrases: &EmbeddingMatrix,
    threshold: f64,
) -> Result<BagDataset> {
    load(text, vocab, emb, Some(Phrases { table: phrases, threshold }))
}

fn load(
    text: &str,
    vocab: Arc<Vocab>,
    emb: Arc<EmbeddingMatrix>,
    phrases: Option<Phrases<'_>>,
) -> Result<BagDataset> {
    let phrase_table = phrases
        .as_ref()
        .map(|p| p.table.map(|v| v as f64));
    let mut bags = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: RawBag = serde_json::from_str(raw_line).map_err(|e| CorpusError::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        let rel = resolve(&raw.rel, &vocab.relations).ok_or_else(|| CorpusError::UnknownRelation {
            line,
            rel: raw.rel.describe(),
        })?;
        let types = |labels: &[Label]| -> Result<Vec<usize>> {
            if labels.is_empty() {
                return Ok(vec![0]);
            }
            labels
                .iter()
                .map(|l| {
                    resolve(l, &vocab.types).ok_or_else(|| CorpusError::UnknownType {
                        line,
                        ty: l.describe(),
                    })
                })
                .collect()
        };
        let sub_types = types(&raw.sub_types)?;
        let obj_types = types(&raw.obj_types)?;
        if raw.sentences.is_empty() {
            return Err(CorpusError::EmptyBag { line });
        }
        let mut sentences = Vec::with_capacity(raw.sentences.len());
        for s in raw.sentences {
            let emb_row = usize::try_from(s.emb)
                .ok()
                .filter(|&r| r < emb.rows())
                .ok_or(CorpusError::BadEmbRow {
                    line,
                    row: s.emb as usize,
                    rows: emb.rows(),
                })?;
            let alias_ids = match (s.aliases, &phrases, &phrase_table) {
                (Some(ids), _, _) => ids
                    .into_iter()
                    .map(|a| {
                        usize::try_from(a)
                            .ok()
                            .filter(|&a| a < vocab.aliases.len())
                            .ok_or_else(|| CorpusError::UnknownAlias {
                                line,
                                alias: a.to_string(),
                            })
                    })
                    .collect::<Result<Vec<_>>>()?,
                (None, Some(p), Some(table)) => {
                    let v: Vec<f64> = emb.row(emb_row).iter().map(|&x| x as f64).collect();
                    match_aliases(&v, table, p.threshold).map_err(|e| CorpusError::AliasMatch {
                        line,
                        reason: e.to_string(),
                    })?
                }
                (None, _, _) => Vec::new(),
            };
            sentences.push(SentenceRec {
                emb_row,
                alias_ids,
                text: s.text,
            });
        }
        bags.push(Bag {
            sub: raw.sub,
            obj: raw.obj,
            rel,
            sub_types,
            obj_types,
            sentences,
        });
    }
    if bags.is_empty() {
        return Err(CorpusError::EmptyDataset);
    }
    Ok(BagDataset {
        bags,
        embeddings: emb,
        vocab,
    })
}

/// Seeded permutation of bag ids split into chunks of `batch_size`.
pub fn batches(dataset: &BagDataset, batch_size: usize, seed: u64) -> Vec<Vec<usize>> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let mut ids: Vec<usize> = (0..dataset.len()).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.chunks(batch_size).map(<[usize]>::to_vec).collect()
}
