use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::model::{ModelConfig, ModelParams};
use crate::scalar::Scalar;

/// Half-width of the uniform range for alias and type embeddings.
pub const SIDE_TABLE_INIT: f64 = 0.1;

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform dense weights, zero biases, side tables in ±0.1. The query
/// is initialised like a `rep_dim → 1` projection.
pub fn init_params<T: Scalar>(cfg: &ModelConfig, n_aliases: usize, n_types: usize, seed: u64) -> ModelParams<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fill = |rows: usize, cols: usize, bound: f64| {
        let dist = Uniform::new_inclusive(-bound, bound);
        let data = (0..rows * cols).map(|_| T::lit(dist.sample(&mut rng))).collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    };
    let alias_table = fill(n_aliases, cfg.d_a, SIDE_TABLE_INIT);
    let type_table = fill(n_types, cfg.d_t, SIDE_TABLE_INIT);
    let query = fill(cfg.rep_dim(), 1, glorot_bound(cfg.rep_dim(), 1)).into_vec();
    let w1 = fill(cfg.u1, cfg.input_dim(), glorot_bound(cfg.input_dim(), cfg.u1));
    let w2 = fill(cfg.u2, cfg.u1, glorot_bound(cfg.u1, cfg.u2));
    let w3 = fill(cfg.n_rel, cfg.u2, glorot_bound(cfg.u2, cfg.n_rel));
    ModelParams {
        alias_table,
        type_table,
        query,
        w1,
        b1: vec![T::zero(); cfg.u1],
        w2,
        b2: vec![T::zero(); cfg.u2],
        w3,
        b3: vec![T::zero(); cfg.n_rel],
    }
}
