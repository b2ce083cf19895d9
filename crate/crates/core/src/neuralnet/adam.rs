use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Rescale gradients whose global L2 norm exceeds this value.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: None,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        AdamConfig {
            learning_rate,
            ..Default::default()
        }
    }
}

/// Moment accumulators for one network, flattened in [`Mlp::params`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let n = net.param_count();
        AdamState {
            config,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update of `net` in place.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let n = net.param_count();
    if state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(Error::shape("adam state", (1, state.first_moment.len()), (1, n)));
    }
    if grads.layers.len() != net.layers().len() {
        return Err(Error::shape(
            "adam gradients",
            (grads.layers.len(), 0),
            (net.layers().len(), 0),
        ));
    }
    for (g, l) in grads.layers.iter().zip(net.layers()) {
        if g.weights.shape() != l.weights.shape() || g.biases.len() != l.biases.len() {
            return Err(Error::shape("adam gradients", g.weights.shape(), l.weights.shape()));
        }
    }
    let cfg = state.config;
    let scale = match cfg.clip_norm {
        Some(max) => {
            let norm = grads.global_norm();
            if norm > max && norm > 0.0 {
                max / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    state.step_count += 1;
    let t = state.step_count as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let (m, v) = (&mut state.first_moment, &mut state.second_moment);
    let mut idx = 0;
    let mut update = |p: &mut f64, g: f64| {
        let g = g * scale;
        m[idx] = cfg.beta1 * m[idx] + (1.0 - cfg.beta1) * g;
        v[idx] = cfg.beta2 * v[idx] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[idx] / bc1;
        let v_hat = v[idx] / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        idx += 1;
    };
    for (layer, g) in net.layers_mut().iter_mut().zip(&grads.layers) {
        for (p, &gv) in layer.weights.data_mut().iter_mut().zip(g.weights.data()) {
            update(p, gv);
        }
        for (p, &gv) in layer.biases.iter_mut().zip(&g.biases) {
            update(p, gv);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::{Activation, Dense, LayerSpec};
    use crate::numerics::Matrix;

    fn scalar_net(w: f64) -> Mlp {
        Mlp::from_layers(vec![Dense {
            spec: LayerSpec::new(1, 1, Activation::Linear, 0.0),
            weights: Matrix::from_rows(&[[w]]).unwrap(),
            biases: vec![0.0],
        }])
        .unwrap()
    }

    fn grads(gw: f64) -> Gradients {
        Gradients {
            layers: vec![crate::neuralnet::LayerGrads {
                weights: Matrix::from_rows(&[[gw]]).unwrap(),
                biases: vec![0.0],
            }],
            input: Matrix::zeros(1, 1),
        }
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut net = scalar_net(0.5);
        let before = net.clone();
        let mut state = AdamState::new(&net, AdamConfig::default());
        adam_step(&mut net, &grads(0.0), &mut state).unwrap();
        assert_eq!(net, before);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m_hat = v_hat = 1 after bias correction, so the step is lr / (1 + eps).
        let mut net = scalar_net(0.5);
        let mut state = AdamState::new(&net, AdamConfig::with_learning_rate(1e-4));
        adam_step(&mut net, &grads(1.0), &mut state).unwrap();
        let delta = 0.5 - net.layers()[0].weights[(0, 0)];
        assert!((delta - 1e-4 / (1.0 + 1e-8)).abs() < 1e-15, "delta {delta}");
    }

    #[test]
    fn deterministic_from_identical_states() {
        let mut a = scalar_net(0.1);
        let mut b = a.clone();
        let mut sa = AdamState::new(&a, AdamConfig::default());
        let mut sb = sa.clone();
        adam_step(&mut a, &grads(0.3), &mut sa).unwrap();
        adam_step(&mut b, &grads(0.3), &mut sb).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }

    #[test]
    fn shape_mismatch() {
        let mut net = scalar_net(0.1);
        let other = Mlp::from_layers(vec![Dense {
            spec: LayerSpec::new(2, 1, Activation::Linear, 0.0),
            weights: Matrix::zeros(1, 2),
            biases: vec![0.0],
        }])
        .unwrap();
        let mut state = AdamState::new(&other, AdamConfig::default());
        assert!(matches!(
            adam_step(&mut net, &grads(1.0), &mut state),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn clipping_bounds_the_step_input() {
        let mut net = scalar_net(0.0);
        let cfg = AdamConfig {
            clip_norm: Some(1.0),
            ..AdamConfig::default()
        };
        let mut state = AdamState::new(&net, cfg);
        adam_step(&mut net, &grads(100.0), &mut state).unwrap();
        assert!((state.first_moment[0] - 0.1).abs() < 1e-12);
    }
}
