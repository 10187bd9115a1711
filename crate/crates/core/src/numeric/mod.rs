//! Dense row-major `f64` matrices, a tape for reverse-mode differentiation
//! over the handful of ops the value network needs, Adam, and a binary
//! checkpoint container.
//!
//! Shape mismatches are caller bugs and panic with both shapes in the
//! message. Subgradients: `relu'(0) = 0`, `|x|'(0) = 0`.

mod checkpoint;
mod graph;
mod params;

use std::fmt;

use thiserror::Error;

pub use checkpoint::Checkpoint;
pub use graph::{Graph, Var};
pub use params::{glorot_uniform, Adam, AdamConfig, ParamId, ParamStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error("parameter `{name}` has no gradient; run backward before stepping")]
    MissingGradient { name: String },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
}

/// A `rows × cols` matrix in row-major order. Vectors are `1 × n`.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "tensor data length {} does not match shape [{rows}, {cols}]",
            data.len()
        );
        Tensor { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::new(1, 1, vec![v])
    }

    pub fn row(data: Vec<f64>) -> Self {
        Tensor::new(1, data.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn row_slice(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn item(&self) -> f64 {
        assert_eq!(
            self.shape(),
            [1, 1],
            "item() on non-scalar tensor {:?}",
            self.shape()
        );
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn abs_sum(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }
}

/// Central differences `(f(θ+h) − f(θ−h)) / 2h` at the given
/// `(parameter, flat index)` coordinates. Restores every coordinate.
pub fn numerical_gradient(
    store: &mut ParamStore,
    coords: &[(ParamId, usize)],
    h: f64,
    mut f: impl FnMut(&ParamStore) -> f64,
) -> Vec<f64> {
    coords
        .iter()
        .map(|&(id, i)| {
            let x = store.value(id).data()[i];
            store.value_mut(id).data_mut()[i] = x + h;
            let up = f(store);
            store.value_mut(id).data_mut()[i] = x - h;
            let down = f(store);
            store.value_mut(id).data_mut()[i] = x;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖₂ / (‖a‖₂ + ‖b‖₂)`, 0 when both are zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()) + norm(&mut b.iter().copied());
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor{:?}{:?}", self.shape(), self.data)
    }
}
