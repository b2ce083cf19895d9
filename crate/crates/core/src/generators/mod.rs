//! Conditional feature generators `x = G(a, z)`.
//!
//! Every kind shares the same generator shape: the class attribute vector and
//! a noise draw are concatenated (`[a | z]`) and fed through an MLP whose
//! output width is the feature dimension. The kinds differ only in how the
//! weights are trained:
//!
//! * [`ModelKind::Gmmn`]: minimize kernel MMD between generated and real
//!   features, one class per step.
//! * [`ModelKind::Acgan`]: adversarial training against a discriminator that
//!   also predicts the class.
//! * [`ModelKind::DenoisingAe`]: the generator is the decoder of an
//!   auto-encoder whose code plays the role of `z`.
//! * [`ModelKind::AdversarialAe`]: as above, with a code discriminator pulling
//!   the code distribution toward the noise prior.

pub mod objectives;
mod persist;
mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use persist::{load_model, save_model, sidecar_path, ModelSidecar};
pub use train::{class_mmd2, train_acgan, train_adversarial_ae, train_denoising_ae, train_generator, train_gmmn};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mmd::KernelSpec;
use crate::neuralnet::{AdamConfig, InitSpec, Mlp};
use crate::numerics::{Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gmmn,
    Acgan,
    DenoisingAe,
    AdversarialAe,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Gmmn,
        ModelKind::Acgan,
        ModelKind::DenoisingAe,
        ModelKind::AdversarialAe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gmmn => "gmmn",
            ModelKind::Acgan => "acgan",
            ModelKind::DenoisingAe => "denoising_ae",
            ModelKind::AdversarialAe => "adversarial_ae",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Param(format!("unknown model kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    /// Standard normal.
    Gaussian,
    /// Uniform on `[0, 1)`.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub dim: usize,
    pub distribution: NoiseDistribution,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            dim: 16,
            distribution: NoiseDistribution::Gaussian,
        }
    }
}

impl NoiseSpec {
    pub fn sample(&self, rng: &mut Rng, rows: usize) -> Result<Matrix> {
        match self.distribution {
            NoiseDistribution::Gaussian => rng.gaussian_matrix(rows, self.dim, 0.0, 1.0),
            NoiseDistribution::Uniform => rng.uniform_matrix(rows, self.dim, 0.0, 1.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Sigmoid,
    Linear,
}

/// Hyperparameters for one generator training run. Every field has a
/// default, so a JSON config only needs the keys it changes; unknown keys are
/// rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub model_kind: ModelKind,
    /// Hidden widths of the generator (and of the encoder for the AEs).
    pub hidden_dims: Vec<usize>,
    /// Allowed `[min, max]` hidden width.
    pub width_range: [usize; 2],
    /// Allowed `[min, max]` number of hidden layers.
    pub depth_range: [usize; 2],
    /// Hidden widths of the AC-GAN discriminator and the code discriminator.
    /// Empty means a linear classifier.
    pub discriminator_hidden_dims: Vec<usize>,
    pub noise: NoiseSpec,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Stddev of the additive Gaussian corruption used by the auto-encoders.
    pub input_noise_stddev: f64,
    pub kernel: KernelSpec,
    /// Selects the generator's stream under the master seed.
    pub seed: u64,
    pub input_dropout: f64,
    pub hidden_dropout: f64,
    /// Whether input dropout also applies to the concatenated `[a | z]`
    /// generator input.
    pub dropout_on_generator_input: bool,
    pub output_activation: OutputActivation,
    /// Weight of the AC-GAN auxiliary class loss relative to real/fake.
    pub aux_loss_weight: f64,
    /// Weight of the encoder's fool-the-code-discriminator term.
    pub adversarial_weight: f64,
    pub init: InitSpec,
    pub clip_norm: Option<f64>,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            model_kind: ModelKind::Gmmn,
            hidden_dims: vec![500],
            width_range: [500, 2000],
            depth_range: [1, 2],
            discriminator_hidden_dims: Vec::new(),
            noise: NoiseSpec::default(),
            learning_rate: 1e-4,
            epochs: 100,
            batch_size: 128,
            input_noise_stddev: 0.1,
            kernel: KernelSpec::default(),
            seed: 0,
            input_dropout: 0.2,
            hidden_dropout: 0.5,
            dropout_on_generator_input: true,
            output_activation: OutputActivation::Sigmoid,
            aux_loss_weight: 1.0,
            adversarial_weight: 1.0,
            init: InitSpec::default(),
            clip_norm: None,
        }
    }
}

impl GeneratorConfig {
    pub fn for_kind(kind: ModelKind) -> Self {
        GeneratorConfig {
            model_kind: kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.width_range;
        if lo > hi {
            return Err(Error::Config(format!("width_range [{lo}, {hi}] is inverted")));
        }
        let [dlo, dhi] = self.depth_range;
        if dlo > dhi {
            return Err(Error::Config(format!("depth_range [{dlo}, {dhi}] is inverted")));
        }
        let depth = self.hidden_dims.len();
        if depth < dlo || depth > dhi {
            return Err(Error::Config(format!(
                "{depth} hidden layers outside depth_range [{dlo}, {dhi}]"
            )));
        }
        if let Some(w) = self.hidden_dims.iter().find(|&&w| w < lo || w > hi) {
            return Err(Error::Config(format!(
                "hidden width {w} outside width_range [{lo}, {hi}]"
            )));
        }
        if self.discriminator_hidden_dims.contains(&0) {
            return Err(Error::Config("discriminator hidden width must be >= 1".into()));
        }
        if self.noise.dim == 0 {
            return Err(Error::Config("noise.dim must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.input_noise_stddev >= 0.0) {
            return Err(Error::Config("input_noise_stddev must be >= 0".into()));
        }
        for (name, p) in [
            ("input_dropout", self.input_dropout),
            ("hidden_dropout", self.hidden_dropout),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::Config(format!("{name} {p} outside [0, 1)")));
            }
        }
        if !(self.aux_loss_weight >= 0.0) || !(self.adversarial_weight >= 0.0) {
            return Err(Error::Config("loss weights must be >= 0".into()));
        }
        if !(self.init.stddev > 0.0) {
            return Err(Error::Config("init.stddev must be > 0".into()));
        }
        self.kernel.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub(crate) fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            clip_norm: self.clip_norm,
            ..AdamConfig::default()
        }
    }
}

/// A trained conditional generator plus the auxiliary networks its kind used.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorModel {
    pub kind: ModelKind,
    /// Input `[a | z]`, output one feature vector per row.
    pub generator: Mlp,
    /// AC-GAN discriminator or adversarial-AE code discriminator.
    pub discriminator: Option<Mlp>,
    /// Auto-encoder encoder; unused when sampling.
    pub encoder: Option<Mlp>,
    pub noise: NoiseSpec,
    pub feature_dim: usize,
    pub attr_dim: usize,
    /// Seen class ids in the order used by the AC-GAN class head.
    pub seen_classes: Vec<usize>,
    pub config: GeneratorConfig,
}

impl GeneratorModel {
    /// Input width of the generator network.
    pub fn input_dim(&self) -> usize {
        self.generator.input_dim()
    }
}

/// Per-epoch loss curves of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model_kind: ModelKind,
    pub epochs: usize,
    /// Mean loss per epoch, keyed by loss term.
    pub curves: BTreeMap<String, Vec<f64>>,
    pub final_losses: BTreeMap<String, f64>,
    /// Classes whose real features were read during training.
    pub trained_on_classes: Vec<usize>,
    /// Wall-clock training time. Not serialized, so reports stay byte-stable.
    #[serde(skip)]
    pub seconds: f64,
}

/// Samples `per_class` features for every attribute row with fresh noise,
/// in eval mode. Labels are attribute row indices.
pub fn generate(
    model: &GeneratorModel,
    attributes: &Matrix,
    per_class: usize,
    rng: &mut Rng,
) -> Result<(Matrix, Vec<usize>)> {
    if attributes.cols() != model.attr_dim {
        return Err(Error::shape(
            "generate",
            attributes.shape(),
            (attributes.rows(), model.attr_dim),
        ));
    }
    if per_class == 0 {
        return Err(Error::Param("per_class must be >= 1".into()));
    }
    let mut rows = Vec::with_capacity(attributes.rows() * per_class);
    let mut labels = Vec::with_capacity(attributes.rows() * per_class);
    for c in 0..attributes.rows() {
        for _ in 0..per_class {
            rows.push(c);
            labels.push(c);
        }
    }
    let cond = attributes.select_rows(&rows);
    let z = model.noise.sample(rng, rows.len())?;
    let features = model.generator.predict(&cond.hconcat(&z)?)?;
    Ok((features, labels))
}

/// [`generate`] for dataset classes; labels are the class ids.
pub fn generate_for_classes(
    model: &GeneratorModel,
    data: &Dataset,
    classes: &[usize],
    per_class: usize,
    rng: &mut Rng,
) -> Result<(Matrix, Vec<usize>)> {
    let (features, idx) = generate(model, &data.attributes_of(classes), per_class, rng)?;
    Ok((features, idx.into_iter().map(|i| classes[i]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        GeneratorConfig::default().validate().unwrap();
    }

    #[test]
    fn width_outside_range_rejected() {
        let cfg = GeneratorConfig {
            hidden_dims: vec![64],
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let cfg = GeneratorConfig {
            hidden_dims: vec![500, 500, 500],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn unknown_config_key_rejected() {
        let err = serde_json::from_str::<GeneratorConfig>(r#"{"learning_rat": 0.1}"#);
        assert!(err.is_err());
        let cfg: GeneratorConfig = serde_json::from_str(r#"{"epochs": 3}"#).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.batch_size, 128);
    }
}
