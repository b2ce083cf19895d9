use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Leak used by the hidden layers of every network.
pub const DEFAULT_LEAK: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Linear,
    LeakyRelu {
        leak: f64,
    },
    Sigmoid,
    /// Row-wise softmax. Only valid on the final layer.
    Softmax,
}

impl Activation {
    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu { leak: DEFAULT_LEAK }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Activation::Linear => 0,
            Activation::LeakyRelu { .. } => 1,
            Activation::Sigmoid => 2,
            Activation::Softmax => 3,
        }
    }

    pub(crate) fn leak(self) -> f64 {
        match self {
            Activation::LeakyRelu { leak } => leak,
            _ => 0.0,
        }
    }

    pub(crate) fn from_tag(tag: u8, leak: f64) -> Option<Self> {
        Some(match tag {
            0 => Activation::Linear,
            1 => Activation::LeakyRelu { leak },
            2 => Activation::Sigmoid,
            3 => Activation::Softmax,
            _ => return None,
        })
    }

    pub fn apply(self, pre: &Matrix) -> Matrix {
        match self {
            Activation::Linear => pre.clone(),
            Activation::LeakyRelu { leak } => pre.map(|v| if v > 0.0 { v } else { leak * v }),
            Activation::Sigmoid => pre.map(sigmoid),
            Activation::Softmax => softmax_rows(pre),
        }
    }

    /// Gradient with respect to the pre-activation, given the upstream
    /// gradient on the activation output.
    pub fn backprop(self, pre: &Matrix, out: &Matrix, upstream: &Matrix) -> Matrix {
        match self {
            Activation::Linear => upstream.clone(),
            Activation::LeakyRelu { leak } => {
                let mut g = upstream.clone();
                for (gv, &z) in g.data_mut().iter_mut().zip(pre.data()) {
                    if z <= 0.0 {
                        *gv *= leak;
                    }
                }
                g
            }
            Activation::Sigmoid => {
                let mut g = upstream.clone();
                for (gv, &y) in g.data_mut().iter_mut().zip(out.data()) {
                    *gv *= y * (1.0 - y);
                }
                g
            }
            Activation::Softmax => {
                let mut g = upstream.clone();
                for r in 0..g.rows() {
                    let y = out.row(r);
                    let inner: f64 = upstream.row(r).iter().zip(y).map(|(a, b)| a * b).sum();
                    for (gv, &yv) in g.row_mut(r).iter_mut().zip(y) {
                        *gv = yv * (*gv - inner);
                    }
                }
                g
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    /// Drop probability applied to this layer's input in train mode.
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation, dropout: f64) -> Self {
        LayerSpec {
            input_dim,
            output_dim,
            activation,
            dropout,
        }
    }

    pub(crate) fn validate(&self, index: usize) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::Param(format!("layer {index} has a zero dimension")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Param(format!(
                "layer {index} dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if let Activation::LeakyRelu { leak } = self.activation {
            if !leak.is_finite() {
                return Err(Error::Param(format!("layer {index} leak is not finite")));
            }
        }
        Ok(())
    }
}

/// Chains `dims` into leaky-relu hidden layers and a final layer with
/// `output`. The first layer gets `input_dropout`, the others
/// `hidden_dropout`.
pub fn chain_specs(dims: &[usize], output: Activation, input_dropout: f64, hidden_dropout: f64) -> Vec<LayerSpec> {
    assert!(dims.len() >= 2, "need at least input and output widths");
    let n = dims.len() - 1;
    (0..n)
        .map(|i| {
            let act = if i + 1 == n { output } else { Activation::leaky_relu() };
            let drop = if i == 0 { input_dropout } else { hidden_dropout };
            LayerSpec::new(dims[i], dims[i + 1], act, drop)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub spec: LayerSpec,
    /// `output_dim x input_dim`.
    pub weights: Matrix,
    pub biases: Vec<f64>,
}
