//! Softmax classifier trained on real and generated features.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::binio::{sidecar_path, write_file};
use crate::error::{Error, Result};
use crate::neuralnet::format::{load_nets, save_nets};
use crate::neuralnet::{
    adam_step, chain_specs, init_mlp, softmax_cross_entropy, softmax_rows, Activation, AdamConfig, AdamState, InitSpec,
    Mlp, Mode,
};
use crate::numerics::{streams, Matrix, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Empty gives a linear classifier.
    pub hidden_dims: Vec<usize>,
    pub hidden_dropout: f64,
    pub init: InitSpec,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            learning_rate: 1e-3,
            epochs: 50,
            batch_size: 128,
            hidden_dims: Vec::new(),
            hidden_dropout: 0.0,
            init: InitSpec::default(),
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("classifier learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("classifier batch_size must be >= 1".into()));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config("classifier hidden width must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.hidden_dropout) {
            return Err(Error::Config("classifier hidden_dropout outside [0, 1)".into()));
        }
        Ok(())
    }
}

/// Linear (by default) softmax model over an ordered set of class ids.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxClassifier {
    net: Mlp,
    class_ids: Vec<usize>,
}

const KIND_TAG: &str = "softmax_classifier";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifierSidecar {
    kind: String,
    class_ids: Vec<usize>,
}

impl SoftmaxClassifier {
    /// Wraps a network whose final layer emits one logit per class id.
    pub fn from_parts(net: Mlp, class_ids: Vec<usize>) -> Result<Self> {
        let unique: BTreeSet<_> = class_ids.iter().collect();
        if unique.len() != class_ids.len() {
            return Err(Error::Data("classifier class ids must be unique".into()));
        }
        if net.output_dim() != class_ids.len() {
            return Err(Error::shape(
                "classifier head",
                (net.output_dim(), 1),
                (class_ids.len(), 1),
            ));
        }
        if !matches!(net.layers().last().map(|l| l.spec.activation), Some(Activation::Linear)) {
            return Err(Error::Param("classifier network must end in a linear layer".into()));
        }
        Ok(SoftmaxClassifier { net, class_ids })
    }

    pub fn class_ids(&self) -> &[usize] {
        &self.class_ids
    }

    pub fn num_classes(&self) -> usize {
        self.class_ids.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    /// Final-layer weights, `num_classes x input width`.
    pub fn weights(&self) -> &Matrix {
        &self.net.layers().last().expect("non-empty").weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.net.layers().last().expect("non-empty").biases
    }

    pub fn predict_logits(&self, features: &Matrix) -> Result<Matrix> {
        self.net.predict(features)
    }

    /// Class probabilities; column `j` is `class_ids()[j]`.
    pub fn predict_scores(&self, features: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.predict_logits(features)?))
    }

    /// Top-`k` class ids per row, by descending probability; exact ties go
    /// to the smaller class id.
    pub fn predict_topk(&self, features: &Matrix, k: usize) -> Result<Vec<Vec<usize>>> {
        if k == 0 || k > self.num_classes() {
            return Err(Error::Param(format!("k = {k} outside [1, {}]", self.num_classes())));
        }
        let scores = self.predict_scores(features)?;
        let all: Vec<usize> = (0..self.num_classes()).collect();
        Ok(scores
            .row_iter()
            .map(|row| rank_columns(row, &self.class_ids, &all)[..k].to_vec())
            .collect())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_nets(path, &[&self.net])?;
        let side = ClassifierSidecar {
            kind: KIND_TAG.into(),
            class_ids: self.class_ids.clone(),
        };
        let mut json = serde_json::to_string_pretty(&side)?;
        json.push('\n');
        write_file(&sidecar_path(path), json.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let side_path = sidecar_path(path);
        let text = std::fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
        let side: ClassifierSidecar =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", side_path.display())))?;
        if side.kind != KIND_TAG {
            return Err(Error::Data(format!("sidecar kind {:?} is not {KIND_TAG}", side.kind)));
        }
        let mut nets = load_nets(path)?;
        if nets.len() != 1 {
            return Err(Error::Data(format!("classifier file holds {} networks", nets.len())));
        }
        SoftmaxClassifier::from_parts(nets.remove(0), side.class_ids)
    }
}

/// Class ids of `columns` ordered by descending score, ties by ascending id.
pub(crate) fn rank_columns(scores: &[f64], class_ids: &[usize], columns: &[usize]) -> Vec<usize> {
    let mut cols = columns.to_vec();
    cols.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(class_ids[a].cmp(&class_ids[b]))
    });
    cols.into_iter().map(|c| class_ids[c]).collect()
}

/// Cross-entropy training with Adam on shuffled mini-batches.
pub fn train_classifier(
    features: &Matrix,
    labels: &[usize],
    class_ids: &[usize],
    cfg: &ClassifierConfig,
    rng: &Rng,
) -> Result<SoftmaxClassifier> {
    cfg.validate()?;
    if features.rows() != labels.len() {
        return Err(Error::shape("train_classifier", features.shape(), (labels.len(), 1)));
    }
    if !features.is_finite() {
        return Err(Error::Data("classifier training features are not finite".into()));
    }
    let max_id = class_ids.iter().copied().max().unwrap_or(0);
    let mut column = vec![usize::MAX; max_id + 1];
    for (j, &c) in class_ids.iter().enumerate() {
        column[c] = j;
    }
    let targets = labels
        .iter()
        .map(|&l| match column.get(l) {
            Some(&j) if j != usize::MAX => Ok(j),
            _ => Err(Error::Data(format!(
                "label {l} is not among the classifier's class ids"
            ))),
        })
        .collect::<Result<Vec<usize>>>()?;

    let mut dims = vec![features.cols()];
    dims.extend_from_slice(&cfg.hidden_dims);
    dims.push(class_ids.len());
    let specs = chain_specs(&dims, Activation::Linear, 0.0, cfg.hidden_dropout);
    let mut net = init_mlp(&specs, cfg.init, &mut rng.derive(streams::INIT))?;
    if class_ids.iter().collect::<BTreeSet<_>>().len() != class_ids.len() {
        return Err(Error::Data("classifier class ids must be unique".into()));
    }

    let mut adam = AdamState::new(&net, AdamConfig::with_learning_rate(cfg.learning_rate));
    let mut shuffle_rng = rng.derive(streams::SHUFFLE);
    let mut drop_rng = rng.derive(streams::DROPOUT);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    for epoch in 0..cfg.epochs {
        shuffle_rng.shuffle(&mut order);
        for batch in order.chunks(cfg.batch_size) {
            let x = features.select_rows(batch);
            let y: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (logits, tape) = net.forward(&x, Mode::Train, &mut drop_rng)?;
            let (loss, grad) = softmax_cross_entropy(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::Numerical {
                    epoch,
                    term: "classifier_cross_entropy".into(),
                });
            }
            let grads = net.backward(&tape, &grad)?;
            adam_step(&mut net, &grads, &mut adam)?;
        }
    }
    SoftmaxClassifier::from_parts(net, class_ids.to_vec())
}
