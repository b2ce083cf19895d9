//! Desk-scale benchmark with a known attribute-to-feature map.
//!
//! Class attributes are uniform in `[0, 1]^A`. Image features are
//! `s (W a + tanh(gain * V (a - 0.5))) + b` (the tanh term only for the
//! mixed variant) plus isotropic Gaussian noise, then
//! rescaled with parameters fit on the seen-class train images. Unseen
//! classes also get train-sized samples, but those are returned only in the
//! [`SyntheticOracle`] for building control classifiers.

use serde::{Deserialize, Serialize};

use super::{apply_scaling, fit_scaling, Dataset, ScalingParams};
use crate::error::{Error, Result};
use crate::numerics::{streams, Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    Linear,
    TanhMixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub seen_count: usize,
    pub attr_dim: usize,
    pub feature_dim: usize,
    pub examples_per_class_train: usize,
    pub examples_per_class_test: usize,
    pub nonlinearity: Nonlinearity,
    pub noise_stddev: f64,
    /// Scale of the class-dependent part of the features relative to the
    /// noise; smaller values make classes harder to separate.
    pub signal_scale: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_classes: 20,
            seen_count: 15,
            attr_dim: 8,
            feature_dim: 32,
            examples_per_class_train: 100,
            examples_per_class_test: 50,
            nonlinearity: Nonlinearity::TanhMixed,
            noise_stddev: 0.05,
            signal_scale: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seen_count >= self.num_classes {
            return Err(Error::Param(format!(
                "seen_count {} must be below num_classes {}",
                self.seen_count, self.num_classes
            )));
        }
        let counts = [
            ("num_classes", self.num_classes),
            ("seen_count", self.seen_count),
            ("attr_dim", self.attr_dim),
            ("feature_dim", self.feature_dim),
            ("examples_per_class_train", self.examples_per_class_train),
            ("examples_per_class_test", self.examples_per_class_test),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Param(format!("{name} must be >= 1")));
        }
        if !(self.noise_stddev >= 0.0) || !self.noise_stddev.is_finite() {
            return Err(Error::Param(format!("noise_stddev {} must be >= 0", self.noise_stddev)));
        }
        if !(self.signal_scale > 0.0) || !self.signal_scale.is_finite() {
            return Err(Error::Param(format!("signal_scale {} must be > 0", self.signal_scale)));
        }
        Ok(())
    }
}

/// Ground-truth map from attributes to raw (unscaled) features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMap {
    /// `feature_dim x attr_dim`.
    pub linear: Matrix,
    pub offset: Vec<f64>,
    /// `feature_dim x attr_dim`; present for the tanh-mixed variant.
    pub mixing: Option<Matrix>,
    pub gain: f64,
    /// Multiplies the attribute-dependent part.
    pub signal_scale: f64,
}

const TANH_GAIN: f64 = 3.0;

impl SyntheticMap {
    /// Noise-free raw features for each attribute row.
    pub fn apply(&self, attributes: &Matrix) -> Result<Matrix> {
        let mut out = attributes.matmul_nt(&self.linear)?;
        if let Some(mix) = &self.mixing {
            let centered = attributes.map(|v| v - 0.5);
            let hidden = centered.matmul_nt(mix)?.map(|v| (self.gain * v).tanh());
            out.add_assign(&hidden)?;
        }
        let mut out = out.scale(self.signal_scale);
        out.add_row_broadcast(&self.offset)?;
        Ok(out)
    }
}

/// Everything a test needs to build oracle classifiers for the benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    pub spec: SyntheticSpec,
    pub map: SyntheticMap,
    pub feature_scaling: ScalingParams,
    /// Scaled train-sized samples of the unseen classes, never part of the dataset.
    pub unseen_train_features: Matrix,
    pub unseen_train_labels: Vec<usize>,
}

pub fn make_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, SyntheticOracle)> {
    spec.validate()?;
    let master = Rng::new(spec.seed);
    let mut rng = master.derive(streams::DATA);
    let a_dim = spec.attr_dim;
    let d_dim = spec.feature_dim;

    let attributes = rng.uniform_matrix(spec.num_classes, a_dim, 0.0, 1.0)?;
    let scale = 1.0 / (a_dim as f64).sqrt();
    let linear = rng.gaussian_matrix(d_dim, a_dim, 0.0, scale)?;
    let offset = rng.gaussian_matrix(1, d_dim, 0.0, 0.1)?.into_vec();
    let mixing = match spec.nonlinearity {
        Nonlinearity::Linear => None,
        Nonlinearity::TanhMixed => Some(rng.gaussian_matrix(d_dim, a_dim, 0.0, scale)?),
    };
    let map = SyntheticMap {
        linear,
        offset,
        mixing,
        gain: TANH_GAIN,
        signal_scale: spec.signal_scale,
    };
    let means = map.apply(&attributes)?;

    let mut classes: Vec<usize> = (0..spec.num_classes).collect();
    master.derive(streams::SPLIT).shuffle(&mut classes);
    let mut seen = classes[..spec.seen_count].to_vec();
    let mut unseen = classes[spec.seen_count..].to_vec();
    seen.sort_unstable();
    unseen.sort_unstable();
    let is_seen = |c: usize| seen.binary_search(&c).is_ok();

    let n_train = spec.examples_per_class_train;
    let n_test = spec.examples_per_class_test;
    let mut noise_rng = master.derive(streams::NOISE);
    let mut rows: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut oracle_rows: Vec<f64> = Vec::new();
    let mut oracle_labels = Vec::new();
    for c in 0..spec.num_classes {
        let mean = means.row(c);
        let noise = noise_rng.gaussian_matrix(n_train + n_test, d_dim, 0.0, spec.noise_stddev)?;
        for k in 0..n_train + n_test {
            let sample = mean.iter().zip(noise.row(k)).map(|(m, e)| m + e);
            let is_train = k < n_train;
            if is_train && !is_seen(c) {
                oracle_rows.extend(sample);
                oracle_labels.push(c);
                continue;
            }
            rows.extend(sample);
            let idx = labels.len();
            labels.push(c);
            if is_train {
                train.push(idx);
            } else {
                test.push(idx);
            }
        }
    }
    let raw = Matrix::from_vec(labels.len(), d_dim, rows)?;
    let raw_oracle = Matrix::from_vec(oracle_labels.len(), d_dim, oracle_rows)?;
    let feature_scaling = fit_scaling(&raw.select_rows(&train));
    let features = apply_scaling(&feature_scaling, &raw)?;
    let unseen_train_features = apply_scaling(&feature_scaling, &raw_oracle)?;
    let class_attributes = apply_scaling(&fit_scaling(&attributes), &attributes)?;
    let names = (0..spec.num_classes).map(|c| format!("class_{c:02}")).collect();

    let data = Dataset::new(features, labels, class_attributes, names, seen, unseen, train, test)?;
    let oracle = SyntheticOracle {
        spec: spec.clone(),
        map,
        feature_scaling,
        unseen_train_features,
        unseen_train_labels: oracle_labels,
    };
    Ok((data, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            num_classes: 5,
            seen_count: 3,
            attr_dim: 3,
            feature_dim: 4,
            examples_per_class_train: 6,
            examples_per_class_test: 4,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn noiseless_linear_classes_are_constant() {
        let spec = SyntheticSpec {
            noise_stddev: 0.0,
            nonlinearity: Nonlinearity::Linear,
            ..small()
        };
        let (d, _) = make_synthetic(&spec).unwrap();
        for c in 0..spec.num_classes {
            let rows: Vec<_> = (0..d.labels().len()).filter(|&i| d.labels()[i] == c).collect();
            for &i in &rows[1..] {
                assert_eq!(d.features().row(i), d.features().row(rows[0]));
            }
        }
    }

    #[test]
    fn deterministic() {
        let (a, oa) = make_synthetic(&small()).unwrap();
        let (b, ob) = make_synthetic(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(oa, ob);
    }

    #[test]
    fn balanced_and_scaled() {
        let spec = small();
        let (d, o) = make_synthetic(&spec).unwrap();
        assert!(d.is_unit_scaled());
        assert_eq!(d.seen_classes().len(), 3);
        assert_eq!(d.unseen_classes().len(), 2);
        for &c in d.seen_classes() {
            assert_eq!(d.train_rows_of(c).len(), spec.examples_per_class_train);
            assert_eq!(d.test_rows_in(&[c]).len(), spec.examples_per_class_test);
        }
        for &c in d.unseen_classes() {
            assert!(d.train_rows_of(c).is_empty());
            assert_eq!(d.test_rows_in(&[c]).len(), spec.examples_per_class_test);
            let n = o.unseen_train_labels.iter().filter(|&&l| l == c).count();
            assert_eq!(n, spec.examples_per_class_train);
        }
        assert_eq!(d.preprocessed().unwrap(), d);
    }

    #[test]
    fn invalid_spec() {
        let spec = SyntheticSpec {
            seen_count: 25,
            num_classes: 20,
            ..SyntheticSpec::default()
        };
        assert!(matches!(make_synthetic(&spec), Err(Error::Param(_))));
    }
}
