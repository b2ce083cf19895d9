use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Per-column affine map onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_scaling(train_features: &Matrix) -> ScalingParams {
    let cols = train_features.cols();
    let mut min = vec![f64::INFINITY; cols];
    let mut max = vec![f64::NEG_INFINITY; cols];
    for row in train_features.row_iter() {
        for (c, &v) in row.iter().enumerate() {
            min[c] = min[c].min(v);
            max[c] = max[c].max(v);
        }
    }
    if train_features.rows() == 0 {
        min.fill(0.0);
        max.fill(1.0);
    }
    ScalingParams { min, max }
}

/// `(x - min) / (max - min)` per column, clamped to `[0, 1]`. Constant
/// columns map to 0.
pub fn apply_scaling(params: &ScalingParams, m: &Matrix) -> Result<Matrix> {
    if params.min.len() != m.cols() || params.max.len() != m.cols() {
        return Err(Error::shape("apply_scaling", m.shape(), (1, params.min.len())));
    }
    let mut out = m.clone();
    for r in 0..out.rows() {
        for (c, v) in out.row_mut(r).iter_mut().enumerate() {
            let (lo, hi) = (params.min[c], params.max[c]);
            *v = if hi > lo {
                ((*v - lo) / (hi - lo)).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
    Ok(out)
}

/// Class attribute rows as the mean of the per-image rows of each class.
pub fn average_image_attributes(per_image_attrs: &Matrix, labels: &[usize], num_classes: usize) -> Result<Matrix> {
    if labels.len() != per_image_attrs.rows() {
        return Err(Error::shape(
            "average_image_attributes",
            per_image_attrs.shape(),
            (labels.len(), per_image_attrs.cols()),
        ));
    }
    let mut sums = Matrix::zeros(num_classes, per_image_attrs.cols());
    let mut counts = vec![0usize; num_classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= num_classes {
            return Err(Error::Data(format!(
                "label {l} at row {i} out of range [0, {num_classes})"
            )));
        }
        counts[l] += 1;
        for (s, v) in sums.row_mut(l).iter_mut().zip(per_image_attrs.row(i)) {
            *s += v;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::Data(format!("class {c} has no images to average")));
    }
    for (c, &n) in counts.iter().enumerate() {
        for s in sums.row_mut(c) {
            *s /= n as f64;
        }
    }
    Ok(sums)
}
