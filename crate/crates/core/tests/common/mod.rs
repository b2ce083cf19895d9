#![allow(dead_code)]

use featgen::data::make_synthetic;
use featgen::generators::{GeneratorConfig, ModelKind};
use featgen::pipeline::RunConfig;
use featgen::{ClassifierConfig, Dataset, SyntheticSpec};

/// 8 classes (6 seen), small dims, quick to train on.
pub fn small_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        num_classes: 8,
        seen_count: 6,
        attr_dim: 4,
        feature_dim: 8,
        examples_per_class_train: 30,
        examples_per_class_test: 20,
        seed,
        ..SyntheticSpec::default()
    }
}

pub fn small_data(seed: u64) -> Dataset {
    make_synthetic(&small_spec(seed)).unwrap().0
}

pub fn fast_generator(kind: ModelKind, epochs: usize) -> GeneratorConfig {
    GeneratorConfig {
        hidden_dims: vec![32],
        width_range: [8, 2000],
        learning_rate: 1e-3,
        epochs,
        batch_size: 32,
        noise: featgen::NoiseSpec {
            dim: 4,
            ..Default::default()
        },
        ..GeneratorConfig::for_kind(kind)
    }
}

pub fn fast_run(kind: ModelKind, epochs: usize) -> RunConfig {
    RunConfig {
        generator: fast_generator(kind, epochs),
        classifier: ClassifierConfig {
            epochs: 20,
            ..ClassifierConfig::default()
        },
        per_class: 50,
        ..RunConfig::default()
    }
}

/// Smallest k with P(X >= k) <= alpha for X ~ Binomial(n, p).
pub fn binomial_upper_critical(n: usize, p: f64, alpha: f64) -> usize {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf_below = 0.0;
    for k in 0..=n {
        if 1.0 - cdf_below <= alpha {
            return k;
        }
        cdf_below += pmf;
        pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    n + 1
}

/// Largest k with P(X <= k) <= alpha for X ~ Binomial(n, p).
pub fn binomial_lower_critical(n: usize, p: f64, alpha: f64) -> Option<usize> {
    let mut pmf = (1.0 - p).powi(n as i32);
    let mut cdf = 0.0;
    let mut out = None;
    for k in 0..=n {
        cdf += pmf;
        if cdf > alpha {
            return out;
        }
        out = Some(k);
        pmf *= (n - k) as f64 / (k + 1) as f64 * p / (1.0 - p);
    }
    out
}
