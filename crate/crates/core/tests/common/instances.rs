//! Fixed and randomized model instances for forward and gradient checks.

use bagside::model::{backward, cross_entropy, forward, forward_eval, ModelConfig, ModelParams, Mode};
use bagside::{Activation, Bag, EmbeddingMatrix, Matrix, SentenceRec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Attention weights of [`hand_set`], from `tests/oracles/forward_oracle.py`
/// (mpmath, 50 digits).
#[allow(clippy::excessive_precision)]
pub const HAND_SET_ALPHA: [f64; 2] = [0.48125878412146476151, 0.51874121587853523849];
#[allow(clippy::excessive_precision)]
pub const HAND_SET_PROBS: [f64; 2] = [0.68802185834149427799, 0.31197814165850572201];

/// Hand-set instance mirrored in `tests/oracles/forward_oracle.py`.
pub fn hand_set() -> (Bag, EmbeddingMatrix, ModelParams<f64>, ModelConfig) {
    let cfg = ModelConfig {
        d_s: 2,
        d_a: 1,
        d_t: 1,
        u1: 2,
        a1: Activation::Tanh,
        p1: 0.0,
        u2: 2,
        a2: Activation::Sigmoid,
        p2: 0.0,
        n_rel: 2,
    };
    let emb = Matrix::from_rows(&[vec![0.5f32, -1.0], vec![1.5, 0.25]]).unwrap();
    let col = |v: &[f64]| Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap();
    let params = ModelParams {
        alias_table: col(&[0.1, 0.4, -0.3]),
        type_table: col(&[0.0, 0.7, -0.4]),
        query: vec![0.3, -0.2, 0.5],
        w1: Matrix::from_rows(&[vec![0.2, -0.1, 0.4, 0.3, -0.5], vec![-0.3, 0.25, 0.1, -0.2, 0.6]]).unwrap(),
        b1: vec![0.05, -0.1],
        w2: Matrix::from_rows(&[vec![0.7, -0.4], vec![0.2, 0.9]]).unwrap(),
        b2: vec![0.0, 0.1],
        w3: Matrix::from_rows(&[vec![1.2, -0.7], vec![-0.5, 0.8]]).unwrap(),
        b3: vec![0.1, -0.2],
    };
    let bag = Bag {
        sub: "a".into(),
        obj: "b".into(),
        rel: 1,
        sub_types: vec![1, 2],
        obj_types: vec![2],
        sentences: vec![
            SentenceRec {
                emb_row: 0,
                alias_ids: vec![1, 2],
                text: None,
            },
            SentenceRec {
                emb_row: 1,
                alias_ids: vec![],
                text: None,
            },
        ],
    };
    (bag, emb, params, cfg)
}

pub fn loss_at(bag: &Bag, emb: &EmbeddingMatrix, params: &ModelParams<f64>, cfg: &ModelConfig) -> f64 {
    cross_entropy(&forward_eval(bag, emb, params, cfg).unwrap().probs, bag.rel).unwrap()
}

/// Max relative error of every analytic gradient entry against central
/// differences. Entries where both magnitudes are below `floor` are compared
/// on the absolute scale `floor`.
pub fn max_fd_error(seed: u64, step: f64, floor: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = super::tiny_config(&mut rng);
    let (bag, emb, params) = super::tiny_instance(&mut rng, &cfg, 0.8);
    let cache = forward(&bag, &emb, &params, &cfg, Mode::Train, &mut rng).unwrap();
    let grads = backward(&cache, &bag, bag.rel, &params, &cfg).unwrap();

    let mut worst = 0.0f64;
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.data.to_vec()).collect();
    for (ti, a_tensor) in analytic.iter().enumerate() {
        for (k, &a) in a_tensor.iter().enumerate() {
            let mut plus = params.clone();
            plus.slices_mut()[ti][k] += step;
            let mut minus = params.clone();
            minus.slices_mut()[ti][k] -= step;
            let numeric = (loss_at(&bag, &emb, &plus, &cfg) - loss_at(&bag, &emb, &minus, &cfg)) / (2.0 * step);
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(err);
        }
    }
    worst
}

