use crate::corpus::Bag;
use crate::scalar::{axpy, dot, Scalar};

use super::{ForwardCache, Gradients, ModelConfig, ModelError, ModelParams};

/// Exact gradients of the cross-entropy loss at `label` for the pass recorded
/// in `cache`. Dropout masks are reused from the cache.
pub fn backward<T: Scalar>(
    cache: &ForwardCache<T>,
    bag: &Bag,
    label: usize,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
) -> Result<Gradients<T>, ModelError> {
    let mut grads = params.zeros_like();
    backward_into(cache, bag, label, params, cfg, T::one(), &mut grads)?;
    Ok(grads)
}

/// Accumulates `scale ×` the gradients into `grads`.
pub fn backward_into<T: Scalar>(
    cache: &ForwardCache<T>,
    bag: &Bag,
    label: usize,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    scale: T,
    grads: &mut Gradients<T>,
) -> Result<(), ModelError> {
    check_cache(cache, bag, params, cfg)?;
    if label >= cfg.n_rel {
        return Err(ModelError::BadLabel { label, n: cfg.n_rel });
    }
    if !grads.same_shapes(params) {
        return Err(ModelError::CacheMismatch("gradient buffer shape"));
    }

    // softmax + cross-entropy: dL/dlogits = p − onehot(y)
    let mut d_logits: Vec<T> = cache.probs.iter().map(|&p| p * scale).collect();
    d_logits[label] -= scale;

    grads.w3.add_outer(&d_logits, &cache.out2);
    axpy(&mut grads.b3, T::one(), &d_logits);
    let d_out2 = params.w3.transpose_mul(&d_logits);

    let d_pre2: Vec<T> = (0..cfg.u2)
        .map(|i| d_out2[i] * cache.mask2[i] * cfg.a2.derivative(cache.pre2[i], cache.post2[i]))
        .collect();
    grads.w2.add_outer(&d_pre2, &cache.out1);
    axpy(&mut grads.b2, T::one(), &d_pre2);
    let d_out1 = params.w2.transpose_mul(&d_pre2);

    let d_pre1: Vec<T> = (0..cfg.u1)
        .map(|i| d_out1[i] * cache.mask1[i] * cfg.a1.derivative(cache.pre1[i], cache.post1[i]))
        .collect();
    grads.w1.add_outer(&d_pre1, &cache.z);
    axpy(&mut grads.b1, T::one(), &d_pre1);
    let d_z = params.w1.transpose_mul(&d_pre1);

    let rep_dim = cfg.rep_dim();
    let (d_bag, d_types) = d_z.split_at(rep_dim);
    let (d_sub, d_obj) = d_types.split_at(cfg.d_t);
    for (ids, d) in [(&bag.sub_types, d_sub), (&bag.obj_types, d_obj)] {
        let share = T::one() / T::from_usize(ids.len()).unwrap();
        for &t in ids.iter() {
            axpy(grads.type_table.row_mut(t), share, d);
        }
    }

    // b = Σ αᵢ sᵢ, αᵢ = softmax(q·sᵢ)
    let d_alpha: Vec<T> = cache.reps.iter().map(|s| dot(d_bag, s)).collect();
    let mean_d_alpha = dot(&cache.attn_weights, &d_alpha);
    for (i, s) in cache.reps.iter().enumerate() {
        let alpha = cache.attn_weights[i];
        let d_logit = alpha * (d_alpha[i] - mean_d_alpha);
        axpy(&mut grads.query, d_logit, s);

        // only the alias slice of sᵢ is trainable; embeddings are frozen
        let alias_grad: Vec<T> = (cfg.d_s..rep_dim)
            .map(|k| alpha * d_bag[k] + d_logit * params.query[k])
            .collect();
        let ids = &bag.sentences[i].alias_ids;
        if ids.is_empty() {
            axpy(grads.alias_table.row_mut(0), T::one(), &alias_grad);
        } else {
            let share = T::one() / T::from_usize(ids.len()).unwrap();
            for &a in ids {
                axpy(grads.alias_table.row_mut(a), share, &alias_grad);
            }
        }
    }
    Ok(())
}

fn check_cache<T: Scalar>(
    cache: &ForwardCache<T>,
    bag: &Bag,
    params: &ModelParams<T>,
    cfg: &ModelConfig,
) -> Result<(), ModelError> {
    if cache.reps.len() != bag.sentences.len() || cache.attn_weights.len() != bag.sentences.len() {
        return Err(ModelError::CacheMismatch("sentence count"));
    }
    if cache.reps.iter().any(|r| r.len() != cfg.rep_dim()) || params.query.len() != cfg.rep_dim() {
        return Err(ModelError::CacheMismatch("representation width"));
    }
    if cache.z.len() != cfg.input_dim()
        || cache.pre1.len() != cfg.u1
        || cache.mask1.len() != cfg.u1
        || cache.pre2.len() != cfg.u2
        || cache.mask2.len() != cfg.u2
        || cache.probs.len() != cfg.n_rel
    {
        return Err(ModelError::CacheMismatch("layer widths"));
    }
    params.check_shapes(cfg, params.n_aliases(), params.n_types())?;
    let ids_ok = bag.sentences.iter().all(|s| s.alias_ids.iter().all(|&a| a < params.n_aliases()))
        && bag
            .sub_types
            .iter()
            .chain(&bag.obj_types)
            .all(|&t| t < params.n_types())
        && !bag.sub_types.is_empty()
        && !bag.obj_types.is_empty();
    if !ids_ok {
        return Err(ModelError::CacheMismatch("side-information ids"));
    }
    Ok(())
}
