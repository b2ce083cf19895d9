//! Zero-shot classification by synthesizing image features for unseen
//! classes.
//!
//! A conditional generator `x = G(a, z)` is trained on the seen classes to
//! map a class attribute vector `a` and a noise draw `z` to an image-feature
//! vector. Features generated for the unseen classes then train an ordinary
//! softmax classifier, which handles both classical zero-shot and
//! generalized (seen + unseen) classification.
//!
//! Four generator families are provided: a moment-matching network trained
//! with a kernel MMD loss, an auxiliary-classifier GAN, a conditional
//! denoising auto-encoder, and a conditional adversarial auto-encoder.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub(crate) mod binio;
pub mod classifier;
pub mod data;
pub mod error;
pub mod generators;
pub mod mmd;
pub mod neuralnet;
pub mod numerics;
pub mod pipeline;

pub use classifier::{ClassifierConfig, SoftmaxClassifier};
pub use data::{Dataset, SyntheticSpec};
pub use error::{Error, Result};
pub use generators::{GeneratorConfig, GeneratorModel, ModelKind, NoiseSpec, TrainReport};
pub use mmd::KernelSpec;
pub use numerics::{Matrix, Rng};
pub use pipeline::{EvalReport, Scenario};
