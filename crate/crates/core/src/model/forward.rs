use rand::Rng;

use crate::corpus::{Bag, EmbeddingMatrix};
use crate::scalar::{axpy, dot, Scalar};
use crate::side_info::{alias_vector, type_vector};

use super::{shape_err, ModelConfig, ModelError, ModelParams};

/// Floor applied to the gold probability inside the loss logarithm.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Every intermediate the backward pass needs.
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    /// Fused sentence representations `[embedding ‖ alias vector]`.
    pub reps: Vec<Vec<T>>,
    pub attn_logits: Vec<T>,
    pub attn_weights: Vec<T>,
    pub bag_vec: Vec<T>,
    /// `[bag_vec ‖ subject types ‖ object types]`
    pub z: Vec<T>,
    pub pre1: Vec<T>,
    pub post1: Vec<T>,
    pub mask1: Vec<T>,
    pub out1: Vec<T>,
    pub pre2: Vec<T>,
    pub post2: Vec<T>,
    pub mask2: Vec<T>,
    pub out2: Vec<T>,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

/// `exp(x − max x) / Σ`. Non-finite inputs propagate as NaN.
pub fn stable_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits
        .iter()
        .fold(T::neg_infinity(), |m, &x| if x > m || x.is_nan() { x } else { m });
    let exps: Vec<T> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Dot-product attention with a single query: returns the weights and the
/// weighted sum of `reps`.
pub fn attention_pool<T: Scalar>(reps: &[Vec<T>], query: &[T]) -> Result<(Vec<T>, Vec<T>), ModelError> {
    if reps.is_empty() {
        return Err(ModelError::EmptyBag);
    }
    if let Some(r) = reps.iter().find(|r| r.len() != query.len()) {
        return Err(shape_err("sentence representation", query.len(), r.len()));
    }
    let (_, weights, bag) = attend(reps, query);
    Ok((weights, bag))
}

fn attend<T: Scalar>(reps: &[Vec<T>], query: &[T]) -> (Vec<T>, Vec<T>, Vec<T>) {
    let logits: Vec<T> = reps.iter().map(|s| dot(query, s)).collect();
    let weights = stable_softmax(&logits);
    let mut bag = vec![T::zero(); query.len()];
    for (s, &w) in reps.iter().zip(&weights) {
        axpy(&mut bag, w, s);
    }
    (logits, weights, bag)
}

fn dropout<T: Scalar, R: Rng + ?Sized>(len: usize, rate: f64, mode: Mode, rng: &mut R) -> Vec<T> {
    if mode == Mode::Eval || rate == 0.0 {
        return vec![T::one(); len];
    }
    let keep = T::lit(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| if rng.gen::<f64>() < rate { T::zero() } else { keep })
        .collect()
}

fn check_inputs<T: Scalar>(
    bag: &Bag,
    emb: &EmbeddingMatrix,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
) -> Result<(), ModelError> {
    if bag.sentences.is_empty() {
        return Err(ModelError::EmptyBag);
    }
    if emb.cols() != cfg.d_s {
        return Err(shape_err("embedding dim", cfg.d_s, emb.cols()));
    }
    params.check_shapes(cfg, params.n_aliases(), params.n_types())?;
    if bag.rel >= cfg.n_rel {
        return Err(ModelError::BadLabel {
            label: bag.rel,
            n: cfg.n_rel,
        });
    }
    if let Some(s) = bag.sentences.iter().find(|s| s.emb_row >= emb.rows()) {
        return Err(shape_err("embedding row", format!("< {}", emb.rows()), s.emb_row));
    }
    Ok(())
}

pub fn forward<T: Scalar, R: Rng + ?Sized>(
    bag: &Bag,
    emb: &EmbeddingMatrix,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardCache<T>, ModelError> {
    check_inputs(bag, emb, params, cfg)?;

    let reps = bag
        .sentences
        .iter()
        .map(|s| {
            let mut rep: Vec<T> = emb.row(s.emb_row).iter().map(|&v| T::from_f32_exact(v)).collect();
            rep.extend(alias_vector(&s.alias_ids, &params.alias_table)?);
            Ok(rep)
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    let (attn_logits, attn_weights, bag_vec) = attend(&reps, &params.query);

    let mut z = bag_vec.clone();
    z.extend(type_vector(&bag.sub_types, &params.type_table)?);
    z.extend(type_vector(&bag.obj_types, &params.type_table)?);

    let pre1 = params.w1.affine(&z, &params.b1);
    let post1: Vec<T> = pre1.iter().map(|&x| cfg.a1.apply(x)).collect();
    let mask1 = dropout(cfg.u1, cfg.p1, mode, rng);
    let out1: Vec<T> = post1.iter().zip(&mask1).map(|(&h, &m)| h * m).collect();

    let pre2 = params.w2.affine(&out1, &params.b2);
    let post2: Vec<T> = pre2.iter().map(|&x| cfg.a2.apply(x)).collect();
    let mask2 = dropout(cfg.u2, cfg.p2, mode, rng);
    let out2: Vec<T> = post2.iter().zip(&mask2).map(|(&h, &m)| h * m).collect();

    let logits = params.w3.affine(&out2, &params.b3);
    let probs = stable_softmax(&logits);

    Ok(ForwardCache {
        reps,
        attn_logits,
        attn_weights,
        bag_vec,
        z,
        pre1,
        post1,
        mask1,
        out1,
        pre2,
        post2,
        mask2,
        out2,
        logits,
        probs,
    })
}

/// Deterministic inference pass (no dropout).
pub fn forward_eval<T: Scalar>(
    bag: &Bag,
    emb: &EmbeddingMatrix,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
) -> Result<ForwardCache<T>, ModelError> {
    forward(bag, emb, params, cfg, Mode::Eval, &mut rand::rngs::mock::StepRng::new(0, 0))
}

/// `−ln(max(p_y, ε))`; NaN when `p_y` is NaN.
pub fn cross_entropy<T: Scalar>(probs: &[T], label: usize) -> Result<T, ModelError> {
    let p = *probs.get(label).ok_or(ModelError::BadLabel {
        label,
        n: probs.len(),
    })?;
    if p.is_nan() {
        return Ok(p);
    }
    Ok(-p.max(T::lit(LOSS_EPSILON)).ln())
}

/// Most probable relation (lowest id on ties) and the full distribution.
pub fn predict<T: Scalar>(
    bag: &Bag,
    emb: &EmbeddingMatrix,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
) -> Result<(usize, Vec<T>), ModelError> {
    let probs = forward_eval(bag, emb, params, cfg)?.probs;
    Ok((argmax(&probs), probs))
}

pub(crate) fn argmax<T: Scalar>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}
