use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{shape_err, ModelConfig, ModelError};

pub const TENSOR_NAMES: [&str; 9] = ["alias_table", "type_table", "query", "w1", "b1", "w2", "b2", "w3", "b3"];

/// Every trainable tensor of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub alias_table: Matrix<T>,
    pub type_table: Matrix<T>,
    /// Attention query over fused sentence representations.
    pub query: Vec<T>,
    pub w1: Matrix<T>,
    pub b1: Vec<T>,
    pub w2: Matrix<T>,
    pub b2: Vec<T>,
    pub w3: Matrix<T>,
    pub b3: Vec<T>,
}

/// Gradients mirror the parameter layout exactly.
pub type Gradients<T> = ModelParams<T>;

#[derive(Debug, Clone)]
pub struct TensorRef<'a, T> {
    pub name: &'static str,
    /// `[n]` for vectors, `[rows, cols]` for matrices.
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(cfg: &ModelConfig, n_aliases: usize, n_types: usize) -> Self {
        Self {
            alias_table: Matrix::zeros(n_aliases, cfg.d_a),
            type_table: Matrix::zeros(n_types, cfg.d_t),
            query: vec![T::zero(); cfg.rep_dim()],
            w1: Matrix::zeros(cfg.u1, cfg.input_dim()),
            b1: vec![T::zero(); cfg.u1],
            w2: Matrix::zeros(cfg.u2, cfg.u1),
            b2: vec![T::zero(); cfg.u2],
            w3: Matrix::zeros(cfg.n_rel, cfg.u2),
            b3: vec![T::zero(); cfg.n_rel],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            alias_table: Matrix::zeros(self.alias_table.rows(), self.alias_table.cols()),
            type_table: Matrix::zeros(self.type_table.rows(), self.type_table.cols()),
            query: vec![T::zero(); self.query.len()],
            w1: Matrix::zeros(self.w1.rows(), self.w1.cols()),
            b1: vec![T::zero(); self.b1.len()],
            w2: Matrix::zeros(self.w2.rows(), self.w2.cols()),
            b2: vec![T::zero(); self.b2.len()],
            w3: Matrix::zeros(self.w3.rows(), self.w3.cols()),
            b3: vec![T::zero(); self.b3.len()],
        }
    }

    pub fn n_aliases(&self) -> usize {
        self.alias_table.rows()
    }

    pub fn n_types(&self) -> usize {
        self.type_table.rows()
    }

    /// Tensors in manifest order.
    pub fn tensors(&self) -> [TensorRef<'_, T>; 9] {
        fn m<'a, T: Scalar>(name: &'static str, m: &'a Matrix<T>) -> TensorRef<'a, T> {
            TensorRef {
                name,
                shape: vec![m.rows(), m.cols()],
                data: m.as_slice(),
            }
        }
        fn v<'a, T>(name: &'static str, v: &'a [T]) -> TensorRef<'a, T> {
            TensorRef {
                name,
                shape: vec![v.len()],
                data: v,
            }
        }
        [
            m("alias_table", &self.alias_table),
            m("type_table", &self.type_table),
            v("query", &self.query),
            m("w1", &self.w1),
            v("b1", &self.b1),
            m("w2", &self.w2),
            v("b2", &self.b2),
            m("w3", &self.w3),
            v("b3", &self.b3),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [T]; 9] {
        [
            self.alias_table.as_mut_slice(),
            self.type_table.as_mut_slice(),
            &mut self.query,
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
            self.w3.as_mut_slice(),
            &mut self.b3,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub fn same_shapes(&self, other: &Self) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors().iter())
            .all(|(a, b)| a.shape == b.shape)
    }

    /// Verifies shapes against `cfg` and the vocabulary sizes.
    pub fn check_shapes(&self, cfg: &ModelConfig, n_aliases: usize, n_types: usize) -> Result<(), ModelError> {
        let expected = Self::zeros(cfg, n_aliases, n_types);
        for (got, want) in self.tensors().iter().zip(expected.tensors().iter()) {
            if got.shape != want.shape {
                return Err(shape_err(want.name, &want.shape, &got.shape));
            }
        }
        Ok(())
    }

    /// `self += scale * other`, elementwise over every tensor.
    pub fn add_scaled(&mut self, scale: T, other: &Self) {
        let src = other.tensors();
        for (dst, src) in self.slices_mut().into_iter().zip(src.iter()) {
            for (d, &s) in dst.iter_mut().zip(src.data) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: T) {
        for t in self.slices_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Converts to another scalar width.
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let c = |x: T| U::from_f64(x.as_f64()).unwrap();
        ModelParams {
            alias_table: self.alias_table.map(c),
            type_table: self.type_table.map(c),
            query: self.query.iter().map(|&x| c(x)).collect(),
            w1: self.w1.map(c),
            b1: self.b1.iter().map(|&x| c(x)).collect(),
            w2: self.w2.map(c),
            b2: self.b2.iter().map(|&x| c(x)).collect(),
            w3: self.w3.map(c),
            b3: self.b3.iter().map(|&x| c(x)).collect(),
        }
    }
}

/// Parameters bundled with the architecture they were built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub cfg: ModelConfig,
    pub params: ModelParams<T>,
}
