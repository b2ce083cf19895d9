use std::collections::BTreeMap;

use crate::classifier::{rank_columns, SoftmaxClassifier};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Top-1 accuracy over one test pool.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Accuracy {
    /// Fraction of images classified correctly.
    pub per_image: f64,
    /// Mean over classes present in the pool of each class's accuracy.
    pub per_class: f64,
}

fn space_columns(class_ids: &[usize], space: &[usize]) -> Result<Vec<usize>> {
    space
        .iter()
        .map(|c| {
            class_ids
                .iter()
                .position(|id| id == c)
                .ok_or_else(|| Error::Param(format!("class {c} has no score column")))
        })
        .collect()
}

fn check_rows(scores: &Matrix, class_ids: &[usize], labels: &[usize]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Data("empty test set".into()));
    }
    if scores.rows() != labels.len() || scores.cols() != class_ids.len() {
        return Err(Error::shape(
            "score matrix",
            scores.shape(),
            (labels.len(), class_ids.len()),
        ));
    }
    Ok(())
}

/// Position of each row's true label in the ranking restricted to `space`;
/// `None` when the label is outside the space.
fn label_ranks(scores: &Matrix, class_ids: &[usize], labels: &[usize], space: &[usize]) -> Result<Vec<Option<usize>>> {
    check_rows(scores, class_ids, labels)?;
    let columns = space_columns(class_ids, space)?;
    Ok(scores
        .row_iter()
        .zip(labels)
        .map(|(row, l)| rank_columns(row, class_ids, &columns).iter().position(|c| c == l))
        .collect())
}

/// Accuracy when predictions are restricted to the classes in `space`.
/// Column `j` of `scores` belongs to `class_ids[j]`.
pub fn masked_accuracy(scores: &Matrix, class_ids: &[usize], labels: &[usize], space: &[usize]) -> Result<Accuracy> {
    let ranks = label_ranks(scores, class_ids, labels, space)?;
    let mut per_class: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut hits = 0;
    for (rank, &l) in ranks.iter().zip(labels) {
        let e = per_class.entry(l).or_insert((0, 0));
        e.1 += 1;
        if *rank == Some(0) {
            hits += 1;
            e.0 += 1;
        }
    }
    let class_mean = per_class.values().map(|&(h, n)| h as f64 / n as f64).sum::<f64>() / per_class.len() as f64;
    Ok(Accuracy {
        per_image: hits as f64 / labels.len() as f64,
        per_class: class_mean,
    })
}

/// Flat-Hit@K percentages with predictions restricted to `space`.
pub fn masked_flat_hit(
    scores: &Matrix,
    class_ids: &[usize],
    labels: &[usize],
    space: &[usize],
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > space.len()) {
        return Err(Error::Param(format!("k = {k} outside [1, {}]", space.len())));
    }
    let ranks = label_ranks(scores, class_ids, labels, space)?;
    let n = labels.len() as f64;
    Ok(ks
        .iter()
        .map(|&k| {
            let hits = ranks.iter().filter(|r| matches!(r, Some(p) if *p < k)).count();
            (k, 100.0 * (hits as f64 / n))
        })
        .collect())
}

/// Percentage of rows whose true label is among the classifier's top `k`
/// predictions, for each `k` in `ks`.
pub fn flat_hit_at_k(
    clf: &SoftmaxClassifier,
    features: &Matrix,
    labels: &[usize],
    ks: &[usize],
) -> Result<BTreeMap<usize, f64>> {
    if labels.is_empty() {
        return Err(Error::Data("empty test set".into()));
    }
    let scores = clf.predict_scores(features)?;
    masked_flat_hit(&scores, clf.class_ids(), labels, clf.class_ids(), ks)
}

/// Plain and per-class top-1 accuracy of a classifier over its own label space.
pub fn classifier_accuracy(clf: &SoftmaxClassifier, features: &Matrix, labels: &[usize]) -> Result<Accuracy> {
    let scores = clf.predict_scores(features)?;
    masked_accuracy(&scores, clf.class_ids(), labels, clf.class_ids())
}
