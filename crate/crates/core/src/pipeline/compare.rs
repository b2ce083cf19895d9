use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, EvalMode, RunConfig, Scenario};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::generators::ModelKind;
use crate::numerics::{streams, Rng};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model_kind: ModelKind,
    /// Seed of the stream this kind's runs used.
    pub seed: u64,
    /// u2u accuracy per dataset, in table column order.
    pub accuracies: Vec<f64>,
    pub average: f64,
    /// Final training losses per dataset.
    pub final_losses: Vec<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub datasets: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    /// Aligned text table of accuracies in percent.
    pub fn render(&self) -> String {
        let width = self.datasets.iter().map(|d| d.len()).max().unwrap_or(0).max(8) + 2;
        let mut out = format!("{:<16}", "model");
        for d in &self.datasets {
            out.push_str(&format!("{d:>width$}"));
        }
        out.push_str(&format!("{:>width$}\n", "avg"));
        for row in &self.rows {
            out.push_str(&format!("{:<16}", row.model_kind.name()));
            for a in &row.accuracies {
                out.push_str(&format!("{:>width$.1}", 100.0 * a));
            }
            out.push_str(&format!("{:>width$.1}\n", 100.0 * row.average));
        }
        out
    }
}

/// Runs zero-shot classification for each generator kind on each dataset
/// and tabulates u2u accuracy. `cfgs` must hold exactly one config per kind;
/// rows come out in [`ModelKind::ALL`] order. Pass validation splits (see
/// [`super::pseudo_split`]) to select among models without touching test
/// classes.
pub fn compare_generators(datasets: &[(String, Dataset)], cfgs: &[RunConfig], rng: &Rng) -> Result<ComparisonTable> {
    if datasets.is_empty() {
        return Err(Error::Param("no datasets to compare on".into()));
    }
    let mut by_kind = Vec::with_capacity(ModelKind::ALL.len());
    for kind in ModelKind::ALL {
        let matching: Vec<&RunConfig> = cfgs.iter().filter(|c| c.generator.model_kind == kind).collect();
        match matching.as_slice() {
            [one] => by_kind.push((kind, *one)),
            [] => return Err(Error::Config(format!("no config for model kind {kind}"))),
            _ => return Err(Error::Config(format!("more than one config for model kind {kind}"))),
        }
    }
    if cfgs.len() != by_kind.len() {
        return Err(Error::Config("expected exactly one config per model kind".into()));
    }
    let kind_rngs: Vec<Rng> = (0..by_kind.len() as u64)
        .map(|i| rng.derive(streams::COMPARE).derive(i))
        .collect();

    let jobs: Vec<(usize, usize)> = (0..by_kind.len())
        .flat_map(|k| (0..datasets.len()).map(move |d| (k, d)))
        .collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(k, d)| {
            let out = run(&datasets[d].1, by_kind[k].1, EvalMode::Zsc, &kind_rngs[k])?;
            let acc = out.report.accuracy(Scenario::U2u).expect("zsc reports u2u");
            Ok((acc, out.train_report.final_losses))
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = by_kind
        .iter()
        .enumerate()
        .map(|(k, (kind, _))| {
            let cells = &outcomes[k * datasets.len()..(k + 1) * datasets.len()];
            let accuracies: Vec<f64> = cells.iter().map(|(a, _)| *a).collect();
            ComparisonRow {
                model_kind: *kind,
                seed: kind_rngs[k].seed(),
                average: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
                accuracies,
                final_losses: cells.iter().map(|(_, l)| l.clone()).collect(),
            }
        })
        .collect();
    Ok(ComparisonTable {
        datasets: datasets.iter().map(|(n, _)| n.clone()).collect(),
        rows,
    })
}
