//! Minimal reverse-mode automatic differentiation over small dense
//! matrices, enough for convolutional, attention and MLP layers.
//!
//! Parameters live in one flat `f64` slice. A [`Tape`] borrows that slice,
//! records operations as they are evaluated, and [`Tape::backward`]
//! accumulates gradients into a flat buffer of the same length.

mod tape;

pub use tape::{Tape, Var};

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Row-major matrix. Vectors are `1 × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: alloc::vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor shape mismatch");
        Self { rows, cols, data }
    }

    pub fn row_vector(data: Vec<f64>) -> Self {
        let n = data.len();
        Self::from_vec(1, n, data)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Elu,
    Relu,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => libm::tanh(x),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    libm::expm1(x)
                }
            }
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the input `x` and output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    y + 1.0
                }
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Hands out disjoint ranges of the flat parameter vector.
#[derive(Debug, Clone, Default)]
pub struct ParamAllocator {
    len: usize,
}

impl ParamAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn alloc(&mut self, n: usize) -> usize {
        let off = self.len;
        self.len += n;
        off
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Fully connected layer `y = x Wᵀ + b`, `W` stored `out × in`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dense {
    pub weight: usize,
    pub bias: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn new(alloc: &mut ParamAllocator, inputs: usize, outputs: usize) -> Self {
        let weight = alloc.alloc(inputs * outputs);
        let bias = alloc.alloc(outputs);
        Self { weight, bias, inputs, outputs }
    }

    pub fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    /// Uniform fan-in initialization scaled by `gain`, zero bias.
    pub fn init<R: rand::Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R, gain: f64) {
        let bound = gain * libm::sqrt(3.0 / self.inputs.max(1) as f64);
        for w in &mut params[self.weight..self.weight + self.inputs * self.outputs] {
            *w = rng.random_range(-bound..=bound);
        }
        for b in &mut params[self.bias..self.bias + self.outputs] {
            *b = 0.0;
        }
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        tape.dense(x, *self)
    }
}

/// 1-D convolution over a circular axis (beams wrap). Input is
/// `channels × length`; output length is `ceil(length / stride)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conv1d {
    pub weight: usize,
    pub bias: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

impl Conv1d {
    pub fn new(alloc: &mut ParamAllocator, in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        assert!(kernel > 0 && stride > 0, "kernel and stride must be positive");
        let weight = alloc.alloc(out_channels * in_channels * kernel);
        let bias = alloc.alloc(out_channels);
        Self { weight, bias, in_channels, out_channels, kernel, stride }
    }

    pub fn output_len(&self, len: usize) -> usize {
        len.div_ceil(self.stride)
    }

    pub fn init<R: rand::Rng + ?Sized>(&self, params: &mut [f64], rng: &mut R, gain: f64) {
        let fan_in = (self.in_channels * self.kernel).max(1) as f64;
        let bound = gain * libm::sqrt(3.0 / fan_in);
        let n = self.out_channels * self.in_channels * self.kernel;
        for w in &mut params[self.weight..self.weight + n] {
            *w = rng.random_range(-bound..=bound);
        }
        for b in &mut params[self.bias..self.bias + self.out_channels] {
            *b = 0.0;
        }
    }

    pub fn forward(&self, tape: &mut Tape<'_>, x: Var) -> Var {
        tape.conv1d(x, *self)
    }
}

#[cfg(test)]
mod tests;
