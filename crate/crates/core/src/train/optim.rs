use serde::{Deserialize, Serialize};

use crate::model::{Gradients, ModelParams};
use crate::scalar::Scalar;

use super::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Nadam,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 2] = [OptimizerKind::Nadam, OptimizerKind::Sgd];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Nadam => "nadam",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown optimizer {s:?} (expected nadam or sgd)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NadamConstants {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for NadamConstants {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

fn check<T: Scalar>(params: &ModelParams<T>, other: &ModelParams<T>) -> Result<(), TrainError> {
    if params.same_shapes(other) {
        Ok(())
    } else {
        Err(TrainError::ShapeMismatch)
    }
}

/// `θ ← θ − lr·g`
pub fn sgd_step<T: Scalar>(params: &mut ModelParams<T>, grads: &Gradients<T>, lr: T) -> Result<(), TrainError> {
    check(params, grads)?;
    params.add_scaled(-lr, grads);
    Ok(())
}

/// First/second moment estimates for Nadam.
#[derive(Debug, Clone, PartialEq)]
pub struct NadamState<T> {
    pub m: ModelParams<T>,
    pub v: ModelParams<T>,
    pub t: u64,
    pub constants: NadamConstants,
}

impl<T: Scalar> NadamState<T> {
    pub fn new(params: &ModelParams<T>, constants: NadamConstants) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            constants,
        }
    }
}

/// Nesterov-accelerated Adam:
/// `θ ← θ − lr·(β₁·m̂ + (1−β₁)·g/(1−β₁ᵗ)) / (√v̂ + ε)`.
pub fn nadam_step<T: Scalar>(
    params: &mut ModelParams<T>,
    grads: &Gradients<T>,
    state: &mut NadamState<T>,
    lr: T,
) -> Result<(), TrainError> {
    check(params, grads)?;
    check(params, &state.m)?;
    check(params, &state.v)?;
    state.t += 1;
    let NadamConstants { beta1, beta2, eps } = state.constants;
    let (b1, b2, eps) = (T::lit(beta1), T::lit(beta2), T::lit(eps));
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let bias1 = T::one() - b1.powi(t);
    let bias2 = T::one() - b2.powi(t);

    let g_all = grads.tensors();
    let ms = state.m.slices_mut();
    let vs = state.v.slices_mut();
    for (((theta, g), m), v) in params.slices_mut().into_iter().zip(g_all.iter()).zip(ms).zip(vs) {
        for i in 0..theta.len() {
            let gi = g.data[i];
            m[i] = b1 * m[i] + (T::one() - b1) * gi;
            v[i] = b2 * v[i] + (T::one() - b2) * gi * gi;
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            let nesterov = b1 * m_hat + (T::one() - b1) * gi / bias1;
            theta[i] -= lr * nesterov / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Optimizer with whatever state it carries between steps.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Optimizer<T> {
    Sgd,
    Nadam(NadamState<T>),
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, params: &ModelParams<T>, constants: NadamConstants) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd,
            OptimizerKind::Nadam => Optimizer::Nadam(NadamState::new(params, constants)),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &Gradients<T>, lr: T) -> Result<(), TrainError> {
        match self {
            Optimizer::Sgd => sgd_step(params, grads, lr),
            Optimizer::Nadam(state) => nadam_step(params, grads, state, lr),
        }
    }
}
