use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneratorConfig, GeneratorModel, ModelKind, NoiseSpec};
pub use crate::binio::sidecar_path;
use crate::binio::write_file;
use crate::error::{Error, Result};
use crate::mmd::KernelSpec;
use crate::neuralnet::format::{load_nets, save_nets};

/// JSON written next to a model file (`<model>.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSidecar {
    pub model_kind: ModelKind,
    /// Role of each network record in the model file, in order.
    pub nets: Vec<String>,
    pub noise: NoiseSpec,
    pub kernel: KernelSpec,
    pub feature_dim: usize,
    pub attr_dim: usize,
    pub seen_classes: Vec<usize>,
    pub config: GeneratorConfig,
}

pub fn save_model(model: &GeneratorModel, path: &Path) -> Result<()> {
    let mut nets = vec![&model.generator];
    let mut roles = vec!["generator".to_string()];
    if let Some(e) = &model.encoder {
        nets.push(e);
        roles.push("encoder".into());
    }
    if let Some(d) = &model.discriminator {
        nets.push(d);
        roles.push("discriminator".into());
    }
    save_nets(path, &nets)?;
    let sidecar = ModelSidecar {
        model_kind: model.kind,
        nets: roles,
        noise: model.noise,
        kernel: model.config.kernel.clone(),
        feature_dim: model.feature_dim,
        attr_dim: model.attr_dim,
        seen_classes: model.seen_classes.clone(),
        config: model.config.clone(),
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    write_file(&sidecar_path(path), json.as_bytes())
}

pub fn load_model(path: &Path) -> Result<GeneratorModel> {
    let side_path = sidecar_path(path);
    let text = std::fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: ModelSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", side_path.display())))?;
    let nets = load_nets(path)?;
    if nets.len() != side.nets.len() {
        return Err(Error::Data(format!(
            "{} lists {} networks but the model file holds {}",
            side_path.display(),
            side.nets.len(),
            nets.len()
        )));
    }
    let mut generator = None;
    let mut encoder = None;
    let mut discriminator = None;
    for (role, net) in side.nets.iter().zip(nets) {
        let slot = match role.as_str() {
            "generator" => &mut generator,
            "encoder" => &mut encoder,
            "discriminator" => &mut discriminator,
            other => return Err(Error::Data(format!("unknown network role {other:?}"))),
        };
        *slot = Some(net);
    }
    let generator = generator.ok_or_else(|| Error::Data("model has no generator network".into()))?;
    if generator.input_dim() != side.attr_dim + side.noise.dim || generator.output_dim() != side.feature_dim {
        return Err(Error::shape(
            "generator network",
            (generator.input_dim(), generator.output_dim()),
            (side.attr_dim + side.noise.dim, side.feature_dim),
        ));
    }
    Ok(GeneratorModel {
        kind: side.model_kind,
        generator,
        discriminator,
        encoder,
        noise: side.noise,
        feature_dim: side.feature_dim,
        attr_dim: side.attr_dim,
        seen_classes: side.seen_classes,
        config: side.config,
    })
}
