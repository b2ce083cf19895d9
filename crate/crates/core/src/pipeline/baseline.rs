use std::collections::BTreeSet;

use super::{config_digest, score_report, space_ids, Scenario};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{solve_spd, squared_distance, Matrix};
use crate::pipeline::EvalReport;

/// Ridge regression from features to class attributes, fit on the seen
/// train images; classes are scored by negative squared distance between
/// the mapped feature and their attribute vector.
#[derive(Clone, Debug, PartialEq)]
pub struct NearestAttribute {
    /// `feature_dim x attr_dim`.
    pub weights: Matrix,
    pub feature_mean: Vec<f64>,
    pub attr_mean: Vec<f64>,
}

impl NearestAttribute {
    /// Fits with penalty `1e-3 * feature_dim` on centered data.
    pub fn fit(data: &Dataset) -> Result<Self> {
        let rows = data.train_indices();
        if rows.is_empty() {
            return Err(Error::Data("baseline needs train images".into()));
        }
        let (x, labels) = data.rows(rows);
        let a = data.attributes_of(&labels);
        let feature_mean = x.column_means();
        let attr_mean = a.column_means();
        let xc = centered(&x, &feature_mean);
        let ac = centered(&a, &attr_mean);
        let lambda = 1e-3 * data.feature_dim() as f64;
        let mut gram = xc.matmul_tn(&xc)?;
        for i in 0..gram.rows() {
            gram.row_mut(i)[i] += lambda;
        }
        let weights = solve_spd(&gram, &xc.matmul_tn(&ac)?)?;
        Ok(NearestAttribute {
            weights,
            feature_mean,
            attr_mean,
        })
    }

    /// Predicted attribute vector per feature row.
    pub fn map(&self, features: &Matrix) -> Result<Matrix> {
        let mut out = centered(features, &self.feature_mean).matmul(&self.weights)?;
        out.add_row_broadcast(&self.attr_mean)?;
        Ok(out)
    }

    /// `-||map(x) - a_c||^2` for every row and every row of `attributes`.
    pub fn scores(&self, features: &Matrix, attributes: &Matrix) -> Result<Matrix> {
        let mapped = self.map(features)?;
        if attributes.cols() != mapped.cols() {
            return Err(Error::shape("baseline scores", mapped.shape(), attributes.shape()));
        }
        let mut out = Matrix::zeros(mapped.rows(), attributes.rows());
        for i in 0..mapped.rows() {
            for c in 0..attributes.rows() {
                out.row_mut(i)[c] = -squared_distance(mapped.row(i), attributes.row(c));
            }
        }
        Ok(out)
    }
}

fn centered(m: &Matrix, mean: &[f64]) -> Matrix {
    let mut out = m.clone();
    for r in 0..out.rows() {
        for (v, mu) in out.row_mut(r).iter_mut().zip(mean) {
            *v -= mu;
        }
    }
    out
}

/// Nearest-attribute predictions over `label_space`. Reports every scenario
/// whose label space is contained in `label_space`. Consumes no randomness.
pub fn baseline_nearest_attribute(data: &Dataset, label_space: &[usize]) -> Result<EvalReport> {
    let space: BTreeSet<usize> = label_space.iter().copied().collect();
    if space.is_empty() {
        return Err(Error::Param("empty label space".into()));
    }
    if let Some(&c) = space.iter().find(|&&c| c >= data.num_classes()) {
        return Err(Error::Data(format!("class {c} has no attribute vector")));
    }
    let class_ids: Vec<usize> = space.iter().copied().collect();
    let scenarios: Vec<Scenario> = Scenario::ALL
        .into_iter()
        .filter(|s| space_ids(data, s.label_space()).iter().all(|c| space.contains(c)))
        .filter(|s| {
            let pool = match s.test_pool() {
                super::TestPool::Unseen => data.unseen_classes(),
                super::TestPool::Seen => data.seen_classes(),
            };
            !data.test_rows_in(pool).is_empty()
        })
        .collect();
    if scenarios.is_empty() {
        return Err(Error::Param(
            "label space covers neither all seen nor all unseen classes".into(),
        ));
    }
    let model = NearestAttribute::fit(data)?;
    let attributes = data.attributes_of(&class_ids);
    let digest = config_digest(&serde_json::json!({
        "baseline": "nearest_attribute",
        "label_space": class_ids,
    }))?;
    score_report(
        data,
        &class_ids,
        |x| model.scores(x, &attributes),
        &scenarios,
        &super::EvalOptions::default().ks,
        0,
        digest,
    )
}
