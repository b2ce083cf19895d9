//! End-to-end zero-shot evaluation: classical ZSC, the four generalized
//! scenarios, Flat-Hit@K, zero-shot cross-validation, the generator
//! comparison table, and a nearest-attribute baseline.

mod baseline;
mod compare;
mod cv;
mod metrics;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use baseline::{baseline_nearest_attribute, NearestAttribute};
pub use compare::{compare_generators, ComparisonRow, ComparisonTable};
pub use cv::{
    pseudo_split, zsc_cross_validate, zsc_cross_validate_folds, CandidateResult, CvFold, CvOptions, CvResult,
};
pub use metrics::{classifier_accuracy, flat_hit_at_k, masked_accuracy, masked_flat_hit, Accuracy};

use crate::classifier::{train_classifier, ClassifierConfig, SoftmaxClassifier};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::generators::{generate_for_classes, train_generator, GeneratorConfig, GeneratorModel, TrainReport};
use crate::numerics::{streams, Matrix, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestPool {
    Unseen,
    Seen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSpace {
    Unseen,
    Seen,
    All,
}

/// Test pool and label space of an evaluation, written `pool → space`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    U2u,
    S2s,
    U2a,
    S2a,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::U2u, Scenario::S2s, Scenario::U2a, Scenario::S2a];

    pub fn tag(self) -> &'static str {
        match self {
            Scenario::U2u => "u2u",
            Scenario::S2s => "s2s",
            Scenario::U2a => "u2a",
            Scenario::S2a => "s2a",
        }
    }

    pub fn test_pool(self) -> TestPool {
        match self {
            Scenario::U2u | Scenario::U2a => TestPool::Unseen,
            Scenario::S2s | Scenario::S2a => TestPool::Seen,
        }
    }

    pub fn label_space(self) -> LabelSpace {
        match self {
            Scenario::U2u => LabelSpace::Unseen,
            Scenario::S2s => LabelSpace::Seen,
            Scenario::U2a | Scenario::S2a => LabelSpace::All,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|x| x.tag() == s)
            .ok_or_else(|| Error::Param(format!("unknown scenario {s:?}")))
    }
}

/// Classical zero-shot (unseen test images, unseen labels) or generalized
/// (all four scenarios from one classifier over every class).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Zsc,
    Gzsc,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalMode::Zsc => "zsc",
            EvalMode::Gzsc => "gzsc",
        })
    }
}

impl std::str::FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zsc" => Ok(EvalMode::Zsc),
            "gzsc" => Ok(EvalMode::Gzsc),
            _ => Err(Error::Param(format!("unknown mode {s:?}, expected zsc or gzsc"))),
        }
    }
}

/// Accuracies of one evaluation run. Map keys are scenario tags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub scenario_accuracy: BTreeMap<String, f64>,
    pub per_class_accuracy: BTreeMap<String, f64>,
    /// Flat-Hit@K in percent on the widest unseen-pool scenario.
    pub flat_hit: BTreeMap<usize, f64>,
    pub seed: u64,
    pub config_digest: String,
}

impl EvalReport {
    pub fn accuracy(&self, scenario: Scenario) -> Option<f64> {
        self.scenario_accuracy.get(scenario.tag()).copied()
    }

    pub fn per_class(&self, scenario: Scenario) -> Option<f64> {
        self.per_class_accuracy.get(scenario.tag()).copied()
    }

    /// Fixed-width text table, one line per scenario present.
    pub fn render(&self) -> String {
        let mut out = format!("{:<10}{:>12}{:>12}\n", "scenario", "per_image", "per_class");
        for s in Scenario::ALL {
            if let (Some(a), Some(c)) = (self.accuracy(s), self.per_class(s)) {
                out.push_str(&format!("{:<10}{:>12.4}{:>12.4}\n", s.tag(), a, c));
            }
        }
        for (k, v) in &self.flat_hit {
            out.push_str(&format!("{:<10}{:>12.2}\n", format!("hit@{k}"), v));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Flat-Hit cut-offs; values above the label-space size are skipped.
    pub ks: Vec<usize>,
    /// Also add generated features for seen classes to the GZSC training set.
    pub generate_for_seen: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            ks: vec![1, 2, 5, 10, 20],
            generate_for_seen: false,
        }
    }
}

/// Everything one train-generate-classify run needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub generator: GeneratorConfig,
    pub classifier: ClassifierConfig,
    /// Generated features per class.
    pub per_class: usize,
    pub eval: EvalOptions,
    /// Master seed, used when no seed is given on the command line.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            generator: GeneratorConfig::default(),
            classifier: ClassifierConfig::default(),
            per_class: 500,
            eval: EvalOptions::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.classifier.validate()?;
        if self.per_class == 0 {
            return Err(Error::Param("per_class must be >= 1".into()));
        }
        Ok(())
    }
}

/// Hex SHA-256 of the value's JSON encoding.
pub fn config_digest<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Stream used to train the generator of `cfg` under a master stream.
pub fn generator_rng(master: &Rng, cfg: &GeneratorConfig) -> Rng {
    master.derive(streams::TRAIN).derive(cfg.seed)
}

/// Outputs of a full run: the report plus the trained artifacts.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub train_report: TrainReport,
    pub model: GeneratorModel,
    pub classifier: SoftmaxClassifier,
}

fn sorted(ids: &[usize]) -> Vec<usize> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v
}

pub(crate) fn space_ids(data: &Dataset, space: LabelSpace) -> Vec<usize> {
    match space {
        LabelSpace::Unseen => sorted(data.unseen_classes()),
        LabelSpace::Seen => sorted(data.seen_classes()),
        LabelSpace::All => {
            let set: BTreeSet<usize> = data
                .seen_classes()
                .iter()
                .chain(data.unseen_classes())
                .copied()
                .collect();
            set.into_iter().collect()
        }
    }
}

fn pool_ids(data: &Dataset, pool: TestPool) -> Vec<usize> {
    match pool {
        TestPool::Unseen => sorted(data.unseen_classes()),
        TestPool::Seen => sorted(data.seen_classes()),
    }
}

/// Scores every requested scenario with one scoring function whose columns
/// are `class_ids`. Flat-Hit is taken on the last unseen-pool scenario in
/// `scenarios`, or the last one overall when none uses the unseen pool.
pub(crate) fn score_report(
    data: &Dataset,
    class_ids: &[usize],
    scorer: impl Fn(&Matrix) -> Result<Matrix>,
    scenarios: &[Scenario],
    ks: &[usize],
    seed: u64,
    config_digest: String,
) -> Result<EvalReport> {
    let mut pools: BTreeMap<TestPool, (Matrix, Vec<usize>)> = BTreeMap::new();
    let mut scenario_accuracy = BTreeMap::new();
    let mut per_class_accuracy = BTreeMap::new();
    for &s in scenarios {
        if let std::collections::btree_map::Entry::Vacant(e) = pools.entry(s.test_pool()) {
            let rows = data.test_rows_in(&pool_ids(data, s.test_pool()));
            if rows.is_empty() {
                return Err(Error::Data(format!("no test images for scenario {s}")));
            }
            let (x, y) = data.rows(&rows);
            e.insert((scorer(&x)?, y));
        }
        let (scores, labels) = &pools[&s.test_pool()];
        let acc = masked_accuracy(scores, class_ids, labels, &space_ids(data, s.label_space()))?;
        scenario_accuracy.insert(s.tag().to_string(), acc.per_image);
        per_class_accuracy.insert(s.tag().to_string(), acc.per_class);
    }
    let hit_scenario = scenarios
        .iter()
        .rev()
        .find(|s| s.test_pool() == TestPool::Unseen)
        .or(scenarios.last())
        .ok_or_else(|| Error::Param("no scenarios requested".into()))?;
    let space = space_ids(data, hit_scenario.label_space());
    let mut ks: Vec<usize> = ks.iter().copied().filter(|&k| k >= 1 && k <= space.len()).collect();
    ks.sort_unstable();
    ks.dedup();
    let (scores, labels) = &pools[&hit_scenario.test_pool()];
    let flat_hit = masked_flat_hit(scores, class_ids, labels, &space, &ks)?;
    Ok(EvalReport {
        scenario_accuracy,
        per_class_accuracy,
        flat_hit,
        seed,
        config_digest,
    })
}

fn check_split(data: &Dataset, mode: EvalMode) -> Result<()> {
    if data.unseen_classes().is_empty() {
        return Err(Error::Split("dataset has no unseen classes".into()));
    }
    if data.test_rows_in(data.unseen_classes()).is_empty() {
        return Err(Error::Data("dataset has no unseen-class test images".into()));
    }
    if mode == EvalMode::Gzsc && data.test_rows_in(data.seen_classes()).is_empty() {
        return Err(Error::Data("dataset has no seen-class test images".into()));
    }
    Ok(())
}

/// Generates features with a trained model, trains the classifier, and
/// scores the scenarios of `mode`.
pub fn evaluate_model(
    data: &Dataset,
    model: &GeneratorModel,
    cfg: &RunConfig,
    mode: EvalMode,
    rng: &Rng,
) -> Result<(EvalReport, SoftmaxClassifier)> {
    if model.feature_dim != data.feature_dim() || model.attr_dim != data.attr_dim() {
        return Err(Error::shape(
            "model vs dataset (feature_dim, attr_dim)",
            (model.feature_dim, model.attr_dim),
            (data.feature_dim(), data.attr_dim()),
        ));
    }
    if cfg.per_class == 0 {
        return Err(Error::Param("per_class must be >= 1".into()));
    }
    check_split(data, mode)?;
    let mut gen_rng = rng.derive(streams::GENERATE);
    let unseen = space_ids(data, LabelSpace::Unseen);
    let (class_ids, features, labels, scenarios) = match mode {
        EvalMode::Zsc => {
            let (x, y) = generate_for_classes(model, data, &unseen, cfg.per_class, &mut gen_rng)?;
            (unseen, x, y, vec![Scenario::U2u])
        }
        EvalMode::Gzsc => {
            let generated_for = if cfg.eval.generate_for_seen {
                space_ids(data, LabelSpace::All)
            } else {
                unseen
            };
            let (gx, gy) = generate_for_classes(model, data, &generated_for, cfg.per_class, &mut gen_rng)?;
            let (rx, mut ry) = data.rows(data.train_indices());
            ry.extend(gy);
            (
                space_ids(data, LabelSpace::All),
                rx.vconcat(&gx)?,
                ry,
                Scenario::ALL.to_vec(),
            )
        }
    };
    let clf = train_classifier(
        &features,
        &labels,
        &class_ids,
        &cfg.classifier,
        &rng.derive(streams::CLASSIFIER),
    )?;
    let digest = config_digest(&serde_json::json!({ "mode": mode, "config": cfg }))?;
    let report = score_report(
        data,
        &class_ids,
        |x| clf.predict_scores(x),
        &scenarios,
        &cfg.eval.ks,
        rng.seed(),
        digest,
    )?;
    Ok((report, clf))
}

/// Trains the generator on the seen classes, then [`evaluate_model`].
pub fn run(data: &Dataset, cfg: &RunConfig, mode: EvalMode, rng: &Rng) -> Result<RunOutcome> {
    cfg.validate()?;
    check_split(data, mode)?;
    let (model, train_report) = train_generator(data, &cfg.generator, &generator_rng(rng, &cfg.generator))?;
    let (report, classifier) = evaluate_model(data, &model, cfg, mode, rng)?;
    Ok(RunOutcome {
        report,
        train_report,
        model,
        classifier,
    })
}

fn run_config(cfg: &GeneratorConfig, clf_cfg: &ClassifierConfig, per_class: usize) -> RunConfig {
    RunConfig {
        generator: cfg.clone(),
        classifier: clf_cfg.clone(),
        per_class,
        ..RunConfig::default()
    }
}

/// Classical zero-shot: a classifier over the unseen classes only, trained
/// on generated features, tested on real unseen images.
pub fn run_zsc(
    data: &Dataset,
    cfg: &GeneratorConfig,
    clf_cfg: &ClassifierConfig,
    per_class: usize,
    rng: &Rng,
) -> Result<EvalReport> {
    Ok(run(data, &run_config(cfg, clf_cfg, per_class), EvalMode::Zsc, rng)?.report)
}

/// Generalized zero-shot: one classifier over every class, trained on real
/// seen features plus generated unseen features. The restricted scenarios
/// mask that classifier's score columns.
pub fn run_gzsc(
    data: &Dataset,
    cfg: &GeneratorConfig,
    clf_cfg: &ClassifierConfig,
    per_class: usize,
    rng: &Rng,
) -> Result<EvalReport> {
    Ok(run(data, &run_config(cfg, clf_cfg, per_class), EvalMode::Gzsc, rng)?.report)
}
