use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, EvalMode, RunConfig, Scenario};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{streams, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvOptions {
    /// Fraction of seen classes held out as pseudo-unseen.
    pub holdout_fraction: f64,
    /// Number of random class splits averaged.
    pub folds: usize,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            holdout_fraction: 0.2,
            folds: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub config: RunConfig,
    /// Mean u2u accuracy over folds.
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub pseudo_seen: Vec<usize>,
    pub pseudo_unseen: Vec<usize>,
    /// Union over candidates of the classes whose real features any trainer read.
    pub trained_on_classes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub candidates: Vec<CandidateResult>,
    pub selected: usize,
    pub selected_config: RunConfig,
    pub selected_accuracy: f64,
    pub folds: Vec<CvFold>,
    pub seed: u64,
}

/// Holds out a random `holdout_fraction` of the seen classes as
/// pseudo-unseen. The result keeps only seen-class train images: those of
/// pseudo-seen classes for training and those of pseudo-unseen classes for
/// testing.
pub fn pseudo_split(data: &Dataset, holdout_fraction: f64, rng: &Rng) -> Result<Dataset> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Param(format!(
            "holdout_fraction {holdout_fraction} outside (0, 1)"
        )));
    }
    let mut seen = data.seen_classes().to_vec();
    seen.sort_unstable();
    let held = ((holdout_fraction * seen.len() as f64).round() as usize).max(1);
    if held >= seen.len() || seen.len() - held < 2 {
        return Err(Error::Data(format!(
            "{} seen classes are too few to hold out {held} and keep 2 for training",
            seen.len()
        )));
    }
    rng.derive(streams::SPLIT).shuffle(&mut seen);
    let mut pseudo_unseen = seen[..held].to_vec();
    let mut pseudo_seen = seen[held..].to_vec();
    pseudo_unseen.sort_unstable();
    pseudo_seen.sort_unstable();
    let train: Vec<usize> = pseudo_seen.iter().flat_map(|&c| data.train_rows_of(c)).collect();
    let test: Vec<usize> = pseudo_unseen.iter().flat_map(|&c| data.train_rows_of(c)).collect();
    data.restrict(&train, &test, pseudo_seen, pseudo_unseen)
}

/// Single-split zero-shot cross-validation.
pub fn zsc_cross_validate(
    data: &Dataset,
    candidates: &[RunConfig],
    holdout_fraction: f64,
    rng: &Rng,
) -> Result<CvResult> {
    let opts = CvOptions {
        holdout_fraction,
        folds: 1,
    };
    zsc_cross_validate_folds(data, candidates, &opts, rng)
}

/// Scores every candidate by u2u accuracy on pseudo-unseen classes, averaged
/// over `opts.folds` random class splits, and selects the first best one.
pub fn zsc_cross_validate_folds(
    data: &Dataset,
    candidates: &[RunConfig],
    opts: &CvOptions,
    rng: &Rng,
) -> Result<CvResult> {
    if candidates.is_empty() {
        return Err(Error::Param("no candidate configs".into()));
    }
    if opts.folds == 0 {
        return Err(Error::Param("folds must be >= 1".into()));
    }
    for c in candidates {
        c.validate()?;
    }
    let fold_rngs: Vec<Rng> = (0..opts.folds as u64)
        .map(|k| rng.derive(streams::FOLD).derive(k))
        .collect();
    let splits = fold_rngs
        .iter()
        .map(|r| pseudo_split(data, opts.holdout_fraction, r))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> = (0..splits.len())
        .flat_map(|f| (0..candidates.len()).map(move |c| (f, c)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(f, c)| {
            let out = run(&splits[f], &candidates[c], EvalMode::Zsc, &fold_rngs[f])?;
            let acc = out.report.accuracy(Scenario::U2u).expect("zsc reports u2u");
            Ok((acc, out.train_report.trained_on_classes))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::with_capacity(splits.len());
    for (f, split) in splits.iter().enumerate() {
        let trained: BTreeSet<usize> = outcomes[f * candidates.len()..(f + 1) * candidates.len()]
            .iter()
            .flat_map(|(_, classes)| classes.iter().copied())
            .collect();
        if let Some(c) = split.unseen_classes().iter().find(|c| trained.contains(c)) {
            return Err(Error::Split(format!("pseudo-unseen class {c} entered training")));
        }
        folds.push(CvFold {
            pseudo_seen: split.seen_classes().to_vec(),
            pseudo_unseen: split.unseen_classes().to_vec(),
            trained_on_classes: trained.into_iter().collect(),
        });
    }

    let results: Vec<CandidateResult> = candidates
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let fold_accuracies: Vec<f64> = (0..splits.len())
                .map(|f| outcomes[f * candidates.len() + c].0)
                .collect();
            CandidateResult {
                config: cfg.clone(),
                accuracy: fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64,
                fold_accuracies,
            }
        })
        .collect();
    let mut selected = 0;
    for (i, r) in results.iter().enumerate() {
        if r.accuracy > results[selected].accuracy {
            selected = i;
        }
    }
    Ok(CvResult {
        selected,
        selected_config: results[selected].config.clone(),
        selected_accuracy: results[selected].accuracy,
        candidates: results,
        folds,
        seed: rng.seed(),
    })
}
