//! Datasets, preprocessing, file formats, and the synthetic benchmark.

pub mod format;
mod preprocess;
mod synthetic;

use std::collections::BTreeSet;

pub use format::{load_dataset, save_dataset, Manifest};
pub use preprocess::{apply_scaling, average_image_attributes, fit_scaling, ScalingParams};
pub use synthetic::{make_synthetic, Nonlinearity, SyntheticMap, SyntheticOracle, SyntheticSpec};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Image features with class labels, per-class attribute vectors, the
/// seen/unseen class split, and the per-image train/test partition.
///
/// Construction validates every invariant; the value is immutable afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_attributes: Matrix,
    class_names: Vec<String>,
    seen: Vec<usize>,
    unseen: Vec<usize>,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn check_ids(ids: &[usize], bound: usize, what: &str) -> Result<()> {
    let mut set = BTreeSet::new();
    for &i in ids {
        if i >= bound {
            return Err(Error::Data(format!("{what} entry {i} out of range [0, {bound})")));
        }
        if !set.insert(i) {
            return Err(Error::Data(format!("{what} entry {i} repeated")));
        }
    }
    Ok(())
}

impl Dataset {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_attributes: Matrix,
        class_names: Vec<String>,
        seen: Vec<usize>,
        unseen: Vec<usize>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Dataset> {
        let num_classes = class_attributes.rows();
        if features.rows() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if class_names.len() != num_classes {
            return Err(Error::Data(format!(
                "{} class names for {num_classes} attribute rows",
                class_names.len()
            )));
        }
        if features.cols() == 0 || class_attributes.cols() == 0 {
            return Err(Error::Data("feature and attribute dims must be >= 1".into()));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::Data(format!(
                "label {l} at row {i} out of range [0, {num_classes})"
            )));
        }
        if !features.is_finite() || !class_attributes.is_finite() {
            return Err(Error::Data("features and attributes must be finite".into()));
        }
        check_ids(&seen, num_classes, "seen_classes")?;
        check_ids(&unseen, num_classes, "unseen_classes")?;
        let seen_set: BTreeSet<_> = seen.iter().copied().collect();
        let unseen_set: BTreeSet<_> = unseen.iter().copied().collect();
        if let Some(c) = seen_set.intersection(&unseen_set).next() {
            return Err(Error::Split(format!("class {c} is both seen and unseen")));
        }
        if let Some(&l) = labels.iter().find(|l| !seen_set.contains(l) && !unseen_set.contains(l)) {
            return Err(Error::Split(format!("label {l} is neither seen nor unseen")));
        }
        check_ids(&train, labels.len(), "train_indices")?;
        check_ids(&test, labels.len(), "test_indices")?;
        let train_set: BTreeSet<_> = train.iter().copied().collect();
        if let Some(i) = test.iter().find(|i| train_set.contains(i)) {
            return Err(Error::Split(format!("image {i} is in both train and test partitions")));
        }
        if let Some(&i) = train.iter().find(|&&i| unseen_set.contains(&labels[i])) {
            return Err(Error::Split(format!(
                "train image {i} belongs to unseen class {}",
                labels[i]
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_attributes,
            class_names,
            seen,
            unseen,
            train,
            test,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_attributes(&self) -> &Matrix {
        &self.class_attributes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn seen_classes(&self) -> &[usize] {
        &self.seen
    }

    pub fn unseen_classes(&self) -> &[usize] {
        &self.unseen
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn test_indices(&self) -> &[usize] {
        &self.test
    }

    pub fn num_classes(&self) -> usize {
        self.class_attributes.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn attr_dim(&self) -> usize {
        self.class_attributes.cols()
    }

    /// Attribute rows for `classes`, in order.
    pub fn attributes_of(&self, classes: &[usize]) -> Matrix {
        self.class_attributes.select_rows(classes)
    }

    /// Train-partition image indices with label `class`.
    pub fn train_rows_of(&self, class: usize) -> Vec<usize> {
        self.train
            .iter()
            .copied()
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    /// Test-partition image indices whose label is in `classes`.
    pub fn test_rows_in(&self, classes: &[usize]) -> Vec<usize> {
        let set: BTreeSet<_> = classes.iter().collect();
        self.test
            .iter()
            .copied()
            .filter(|i| set.contains(&self.labels[*i]))
            .collect()
    }

    /// Features and labels of the given rows.
    pub fn rows(&self, indices: &[usize]) -> (Matrix, Vec<usize>) {
        (
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }

    /// True when features and attributes all lie in `[0, 1]`.
    pub fn is_unit_scaled(&self) -> bool {
        let unit = |m: &Matrix| m.data().iter().all(|v| (0.0..=1.0).contains(v));
        unit(&self.features) && unit(&self.class_attributes)
    }

    /// Rescales features with parameters fit on the train partition and
    /// attributes with parameters fit on all class rows. Values outside the
    /// fitted range are clamped to `[0, 1]`.
    pub fn preprocessed(&self) -> Result<Dataset> {
        if self.train.is_empty() {
            return Err(Error::Data("cannot fit feature scaling without train images".into()));
        }
        let feature_params = fit_scaling(&self.features.select_rows(&self.train));
        let attr_params = fit_scaling(&self.class_attributes);
        let mut out = self.clone();
        out.features = apply_scaling(&feature_params, &self.features)?;
        out.class_attributes = apply_scaling(&attr_params, &self.class_attributes)?;
        Ok(out)
    }

    /// New dataset holding only `train_rows` followed by `test_rows`, with the
    /// given split. Class attributes and ids are kept as they are.
    pub fn restrict(
        &self,
        train_rows: &[usize],
        test_rows: &[usize],
        seen: Vec<usize>,
        unseen: Vec<usize>,
    ) -> Result<Dataset> {
        let rows: Vec<usize> = train_rows.iter().chain(test_rows).copied().collect();
        let (features, labels) = self.rows(&rows);
        let train = (0..train_rows.len()).collect();
        let test = (train_rows.len()..rows.len()).collect();
        Dataset::new(
            features,
            labels,
            self.class_attributes.clone(),
            self.class_names.clone(),
            seen,
            unseen,
            train,
            test,
        )
    }

    /// Replaces the seen/unseen split and the partition, re-validating.
    pub fn with_split(
        &self,
        seen: Vec<usize>,
        unseen: Vec<usize>,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            self.labels.clone(),
            self.class_attributes.clone(),
            self.class_names.clone(),
            seen,
            unseen,
            train,
            test,
        )
    }
}
