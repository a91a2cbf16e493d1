//! Brute-force counterparts of the ranking metrics. Nothing here sorts; each
//! triple's rank is counted directly against every other triple.

use bagside::eval::{
    auc, pr_curve, precision_at_n, subsample_protocol, EvalMode, PrPoint, ScoredTriple,
};
use bagside::BagDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n_bags * (n_rel - 1)` triples with coarse scores so ties are common.
/// Returns the triples and the number of positive bags.
pub fn random_triples(seed: u64, n_bags: usize, n_rel: usize) -> (Vec<ScoredTriple>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut positives = 0;
    for bag_id in 0..n_bags {
        let gold = if rng.gen_bool(0.3) { rng.gen_range(1..n_rel) } else { 0 };
        positives += usize::from(gold != 0);
        for rel in 1..n_rel {
            let score = if rng.gen_bool(0.5) {
                f64::from(rng.gen_range(0..20u32)) / 20.0
            } else {
                rng.gen::<f64>()
            };
            out.push(ScoredTriple { bag_id, rel, score, correct: rel == gold });
        }
    }
    // present them unsorted
    for i in (1..out.len()).rev() {
        out.swap(i, rng.gen_range(0..=i));
    }
    (out, positives)
}

fn ahead(a: &ScoredTriple, b: &ScoredTriple) -> bool {
    a.score > b.score || (a.score == b.score && (a.bag_id, a.rel) < (b.bag_id, b.rel))
}

/// 0-based rank of every triple.
pub fn ranks(triples: &[ScoredTriple]) -> Vec<usize> {
    triples
        .iter()
        .map(|t| triples.iter().filter(|o| ahead(o, t)).count())
        .collect()
}

pub fn hits_at(triples: &[ScoredTriple], n: usize) -> usize {
    ranks(triples)
        .iter()
        .zip(triples)
        .filter(|(&r, t)| r < n && t.correct)
        .count()
}

/// Correct-hit indicator by rank position.
fn correct_by_rank(triples: &[ScoredTriple]) -> Vec<bool> {
    let mut by_rank = vec![false; triples.len()];
    for (r, t) in ranks(triples).into_iter().zip(triples) {
        by_rank[r] = t.correct;
    }
    by_rank
}

/// Only positions holding a correct triple add area.
pub fn oracle_auc(triples: &[ScoredTriple], positives: usize) -> f64 {
    let hits = correct_by_rank(triples);
    let mut area = 0.0;
    let mut count = 0usize;
    let mut prev_precision = if hits[0] { 1.0 } else { 0.0 };
    for (k, &h) in hits.iter().enumerate() {
        count += usize::from(h);
        let precision = count as f64 / (k + 1) as f64;
        if h {
            area += (prev_precision + precision) / (2.0 * positives as f64);
        }
        prev_precision = precision;
    }
    area
}

/// Compares the library metrics against the oracles; returns the largest
/// AUC discrepancy.
pub fn check_metric_oracles(seed: u64) -> Result<f64, String> {
    let (triples, positives) = random_triples(seed, 250, 5);
    if triples.len() != 1000 {
        return Err(format!("expected 1000 triples, built {}", triples.len()));
    }
    for n in [1, 7, 50, 100, 200, 300, 999, 1000] {
        let got = precision_at_n(&triples, n).map_err(|e| e.to_string())?;
        let want = hits_at(&triples, n) as f64 / n as f64;
        if got != want {
            return Err(format!("P@{n}: {got} != {want}"));
        }
    }
    let curve = pr_curve(&triples, positives).map_err(|e| e.to_string())?;
    let hits = correct_by_rank(&triples);
    let mut count = 0usize;
    for (k, (p, &h)) in curve.iter().zip(&hits).enumerate() {
        count += usize::from(h);
        let want = PrPoint {
            recall: count as f64 / positives as f64,
            precision: count as f64 / (k + 1) as f64,
        };
        if *p != want {
            return Err(format!("PR point {k}: {p:?} != {want:?}"));
        }
    }
    if curve.len() != triples.len() {
        return Err("PR curve length".into());
    }
    let got = auc(&curve).map_err(|e| e.to_string())?;
    let diff = (got - oracle_auc(&triples, positives)).abs();
    if diff > 1e-12 {
        return Err(format!("AUC off by {diff:e}"));
    }
    Ok(diff)
}

/// One/Two drop every bag with at most two sentences and keep a subset of the
/// rest; All is the identity; same seed, same bytes.
pub fn check_protocol(ds: &BagDataset, seed: u64) -> Result<(), String> {
    let eligible: Vec<_> = ds.bags.iter().filter(|b| b.sentences.len() > 2).collect();
    if eligible.len() == ds.bags.len() {
        return Err("fixture has no short bags to exclude".into());
    }
    for (mode, keep) in [(EvalMode::One, 1), (EvalMode::Two, 2)] {
        let reduced = subsample_protocol(ds, mode, seed).map_err(|e| e.to_string())?;
        if reduced.len() != eligible.len() {
            return Err(format!("{mode}: kept {} of {} eligible bags", reduced.len(), eligible.len()));
        }
        for (r, orig) in reduced.bags.iter().zip(&eligible) {
            if r.sentences.len() != keep || (r.sub.as_str(), r.obj.as_str(), r.rel) != (orig.sub.as_str(), orig.obj.as_str(), orig.rel) {
                return Err(format!("{mode}: bag {}/{} altered", r.sub, r.obj));
            }
            if !r.sentences.iter().all(|s| orig.sentences.contains(s)) {
                return Err(format!("{mode}: sentence not drawn from its bag"));
            }
            if keep == 2 && r.sentences[0] == r.sentences[1] {
                return Err(format!("{mode}: sentence drawn twice"));
            }
        }
        let again = subsample_protocol(ds, mode, seed).map_err(|e| e.to_string())?;
        if format!("{:?}", again.bags) != format!("{:?}", reduced.bags) {
            return Err(format!("{mode}: rerun differs"));
        }
    }
    let all = subsample_protocol(ds, EvalMode::All, seed).map_err(|e| e.to_string())?;
    if all.bags != ds.bags {
        return Err("all: bags changed".into());
    }
    Ok(())
}
