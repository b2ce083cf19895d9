//! Multi-layer perceptrons with hand-written backpropagation, Adam, and the
//! losses used by the generators and the classifier.

mod adam;
pub mod format;
pub mod gradcheck;
mod layer;
mod loss;
mod mlp;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use layer::{chain_specs, sigmoid, softmax_rows, Activation, Dense, LayerSpec, DEFAULT_LEAK};
pub use loss::{l2_reconstruction_loss, sigmoid_cross_entropy, softmax_cross_entropy};
pub use mlp::{init_mlp, Gradients, InitSpec, LayerGrads, Mlp, Mode, Tape};
