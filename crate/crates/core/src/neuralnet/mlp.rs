use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::layer::{Dense, LayerSpec};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

static NEXT_NET_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_NET_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    /// Standard deviation of the centered Gaussian used for weights.
    pub stddev: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec { stddev: 0.02 }
    }
}

/// Multi-layer perceptron with per-layer activation and input dropout.
///
/// Every parameter update bumps an internal version; tapes recorded before
/// an update are rejected by [`Mlp::backward`].
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Dense>,
    id: u64,
    version: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations cached by a forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    net_id: u64,
    version: u64,
    layers: Vec<LayerTape>,
}

#[derive(Clone, Debug)]
struct LayerTape {
    /// Layer input after dropout.
    input: Matrix,
    /// Per-entry dropout multiplier (0 or 1/(1-p)); absent when no dropout ran.
    mask: Option<Matrix>,
    pre: Matrix,
    out: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
    /// Gradient with respect to the network input.
    pub input: Matrix,
}

fn validate_chain(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Param("network needs at least one layer".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        s.validate(i)?;
        if matches!(s.activation, super::Activation::Softmax) && i + 1 != specs.len() {
            return Err(Error::Param(format!("softmax on non-final layer {i}")));
        }
    }
    for (i, pair) in specs.windows(2).enumerate() {
        if pair[0].output_dim != pair[1].input_dim {
            return Err(Error::shape(
                "layer chain",
                (i, pair[0].output_dim),
                (i + 1, pair[1].input_dim),
            ));
        }
    }
    Ok(())
}

/// Weights drawn from `N(0, init.stddev^2)`, biases zero.
pub fn init_mlp(specs: &[LayerSpec], init: InitSpec, rng: &mut Rng) -> Result<Mlp> {
    validate_chain(specs)?;
    if !(init.stddev > 0.0) {
        return Err(Error::Param(format!("init stddev must be > 0, got {}", init.stddev)));
    }
    let layers = specs
        .iter()
        .map(|&spec| {
            Ok(Dense {
                spec,
                weights: rng.gaussian_matrix(spec.output_dim, spec.input_dim, 0.0, init.stddev)?,
                biases: vec![0.0; spec.output_dim],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mlp {
        layers,
        id: fresh_id(),
        version: 0,
    })
}

impl Mlp {
    /// Assembles a network from explicit layers, checking shapes and finiteness.
    pub fn from_layers(layers: Vec<Dense>) -> Result<Mlp> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        validate_chain(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.shape() != (l.spec.output_dim, l.spec.input_dim) {
                return Err(Error::shape(
                    "layer weights",
                    l.weights.shape(),
                    (l.spec.output_dim, l.spec.input_dim),
                ));
            }
            if l.biases.len() != l.spec.output_dim {
                return Err(Error::shape(
                    "layer biases",
                    (1, l.biases.len()),
                    (1, l.spec.output_dim),
                ));
            }
            if !l.weights.is_finite() || l.biases.iter().any(|b| !b.is_finite()) {
                return Err(Error::Data(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Mlp {
            layers,
            id: fresh_id(),
            version: 0,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_dim
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters flattened layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    fn param_slot(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.len();
            if index < nw {
                return &mut l.weights.data_mut()[index];
            }
            index -= nw;
            if index < l.biases.len() {
                return &mut l.biases[index];
            }
            index -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        *self.param_slot(index) = value;
        self.version += 1;
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        self.version += 1;
        &mut self.layers
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.biases.iter().all(|b| b.is_finite()))
    }

    /// Batched forward pass. `rng` is consulted only for train-mode dropout.
    pub fn forward(&self, input: &Matrix, mode: Mode, rng: &mut Rng) -> Result<(Matrix, Tape)> {
        if input.cols() != self.input_dim() {
            return Err(Error::shape(
                "mlp forward",
                input.shape(),
                (input.rows(), self.input_dim()),
            ));
        }
        let mut tapes = Vec::with_capacity(self.layers.len());
        let mut current = input.clone();
        for layer in &self.layers {
            let p = layer.spec.dropout;
            let mask = if mode == Mode::Train && p > 0.0 {
                let keep_scale = 1.0 / (1.0 - p);
                let mut mask = Matrix::zeros(current.rows(), current.cols());
                for m in mask.data_mut() {
                    if rng.next_f64() >= p {
                        *m = keep_scale;
                    }
                }
                current = current.hadamard(&mask)?;
                Some(mask)
            } else {
                None
            };
            let mut pre = current.matmul_nt(&layer.weights)?;
            pre.add_row_broadcast(&layer.biases)?;
            let out = layer.spec.activation.apply(&pre);
            tapes.push(LayerTape {
                input: current,
                mask,
                pre,
                out: out.clone(),
            });
            current = out;
        }
        Ok((
            current,
            Tape {
                net_id: self.id,
                version: self.version,
                layers: tapes,
            },
        ))
    }

    /// Eval-mode forward without a tape.
    pub fn predict(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::shape(
                "mlp predict",
                input.shape(),
                (input.rows(), self.input_dim()),
            ));
        }
        let mut current = input.clone();
        for layer in &self.layers {
            let mut pre = current.matmul_nt(&layer.weights)?;
            pre.add_row_broadcast(&layer.biases)?;
            current = layer.spec.activation.apply(&pre);
        }
        Ok(current)
    }

    /// Exact gradients of `sum(output * output_gradient)` with respect to every
    /// parameter and the input, using the dropout masks on `tape`.
    pub fn backward(&self, tape: &Tape, output_gradient: &Matrix) -> Result<Gradients> {
        if tape.net_id != self.id || tape.version != self.version {
            return Err(Error::Usage(
                "tape was recorded on a different network or before a parameter update".into(),
            ));
        }
        if tape.layers.len() != self.layers.len() {
            return Err(Error::Usage("tape layer count does not match network".into()));
        }
        let last = &tape.layers[tape.layers.len() - 1].out;
        if output_gradient.shape() != last.shape() {
            return Err(Error::shape("mlp backward", output_gradient.shape(), last.shape()));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = output_gradient.clone();
        for (layer, lt) in self.layers.iter().zip(&tape.layers).rev() {
            let dpre = layer.spec.activation.backprop(&lt.pre, &lt.out, &upstream);
            let weights = dpre.matmul_tn(&lt.input)?;
            let biases = dpre.column_sums();
            let mut dinput = dpre.matmul(&layer.weights)?;
            if let Some(mask) = &lt.mask {
                dinput = dinput.hadamard(mask)?;
            }
            grads.push(LayerGrads { weights, biases });
            upstream = dinput;
        }
        grads.reverse();
        Ok(Gradients {
            layers: grads,
            input: upstream,
        })
    }
}

impl Gradients {
    pub fn zeros_like(net: &Mlp, batch: usize) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrads {
                    weights: Matrix::zeros(l.spec.output_dim, l.spec.input_dim),
                    biases: vec![0.0; l.spec.output_dim],
                })
                .collect(),
            input: Matrix::zeros(batch, net.input_dim()),
        }
    }

    /// Parameter gradients in [`Mlp::params`] order.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.weights.data());
            out.extend_from_slice(&l.biases);
        }
        out
    }

    /// Accumulates `other`'s parameter gradients. Input gradients are ignored.
    pub fn accumulate(&mut self, other: &Gradients) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Usage("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.add_assign(&b.weights)?;
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn global_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.data().iter().map(|v| v * v).sum::<f64>() + l.biases.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.is_finite() && l.biases.iter().all(|b| b.is_finite()))
    }
}
