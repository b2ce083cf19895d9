//! `featgen` command-line tool.
//!
//! Every command is deterministic given its inputs and seed. Reports and
//! tables go to stdout and JSON files; progress and errors go to stderr.
//! Exit codes: 0 success, 2 usage/config/data error, 3 numerical failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use featgen::data::{load_dataset, make_synthetic, save_dataset, Nonlinearity};
use featgen::generators::{load_model, save_model, train_generator, TrainReport};
use featgen::pipeline::{
    compare_generators, evaluate_model, generator_rng, pseudo_split, zsc_cross_validate_folds, CvOptions, CvResult,
    EvalMode, RunConfig,
};
use featgen::{Dataset, Error, Rng, SyntheticSpec};

#[derive(Parser)]
#[command(
    name = "featgen",
    version,
    about = "Zero-shot classification with generated features"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark dataset.
    Synth(SynthArgs),
    /// Train a generator on the seen classes of a dataset.
    Train(TrainArgs),
    /// Generate unseen-class features, train the classifier, and report accuracies.
    Eval(EvalArgs),
    /// Zero-shot cross-validation over a grid of run configs.
    Cv(CvArgs),
    /// Compare the four generator kinds.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NonlinearityArg {
    Linear,
    TanhMixed,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    classes: usize,
    #[arg(long, default_value_t = 15)]
    seen_count: usize,
    #[arg(long, default_value_t = 8)]
    attr_dim: usize,
    #[arg(long, default_value_t = 32)]
    feature_dim: usize,
    #[arg(long, default_value_t = 100)]
    train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    test_per_class: usize,
    #[arg(long, value_enum, default_value = "tanh-mixed")]
    nonlinearity: NonlinearityArg,
    #[arg(long, default_value_t = 0.05)]
    noise_stddev: f64,
    #[arg(long, default_value_t = 0.1)]
    signal_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    /// RunConfig JSON; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model_out: PathBuf,
    /// Overrides the generator's epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Master seed; defaults to the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Zsc,
    Gzsc,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// RunConfig JSON for the classifier and evaluation options.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "zsc")]
    mode: ModeArg,
    /// Generated features per class; defaults to the config's value (500).
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    /// JSON array of RunConfig candidates.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 1)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    /// Hold out seen classes as pseudo-unseen.
    Validation,
    /// Use the dataset's own unseen classes.
    Test,
}

#[derive(clap::Args)]
struct CompareArgs {
    /// Dataset manifest; repeat for several table columns.
    #[arg(long, required = true)]
    data: Vec<PathBuf>,
    /// JSON array with one RunConfig per generator kind.
    #[arg(long)]
    configs: PathBuf,
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "validation")]
    split: SplitArg,
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical { .. } | Error::Solver(_) => 3,
        _ => 2,
    }
}

/// Caps the worker pool at `FEATGEN_THREADS` when set.
fn configure_threads() -> featgen::Result<()> {
    let Ok(value) = std::env::var("FEATGEN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("FEATGEN_THREADS={value:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> featgen::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> featgen::Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> featgen::Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> featgen::Result<RunConfig> {
    let cfg = match path {
        Some(p) => parse_json(p)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_synth(a: SynthArgs) -> featgen::Result<()> {
    let spec = SyntheticSpec {
        num_classes: a.classes,
        seen_count: a.seen_count,
        attr_dim: a.attr_dim,
        feature_dim: a.feature_dim,
        examples_per_class_train: a.train_per_class,
        examples_per_class_test: a.test_per_class,
        nonlinearity: match a.nonlinearity {
            NonlinearityArg::Linear => Nonlinearity::Linear,
            NonlinearityArg::TanhMixed => Nonlinearity::TanhMixed,
        },
        noise_stddev: a.noise_stddev,
        signal_scale: a.signal_scale,
        seed: a.seed,
    };
    let (data, oracle) = make_synthetic(&spec)?;
    let manifest = save_dataset(&data, &a.out_dir)?;
    let oracle_path = a.out_dir.join("oracle.json");
    write_json(&oracle_path, &oracle)?;
    eprintln!("wrote {}", manifest.display());
    println!("{}", oracle_path.display());
    Ok(())
}

fn loss_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,term,value\n");
    for epoch in 0..report.epochs {
        for (term, curve) in &report.curves {
            if let Some(v) = curve.get(epoch) {
                let _ = writeln!(out, "{epoch},{term},{v}");
            }
        }
    }
    out
}

fn cmd_train(a: TrainArgs) -> featgen::Result<()> {
    let data = load_dataset(&a.data)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(e) = a.epochs {
        cfg.generator.epochs = e;
    }
    let master = Rng::new(a.seed.unwrap_or(cfg.seed));
    eprintln!(
        "training {} for {} epochs on {} seen classes",
        cfg.generator.model_kind,
        cfg.generator.epochs,
        data.seen_classes().len()
    );
    let (model, report) = train_generator(&data, &cfg.generator, &generator_rng(&master, &cfg.generator))?;
    save_model(&model, &a.model_out)?;
    write_json(&with_suffix(&a.model_out, ".report.json"), &report)?;
    let csv_path = with_suffix(&a.model_out, ".loss.csv");
    std::fs::write(&csv_path, loss_csv(&report)).map_err(|e| Error::io(&csv_path, e))?;
    eprintln!("trained in {:.1}s", report.seconds);
    let mut table = format!("{:<16}{:>16}\n", "term", "final_loss");
    for (term, v) in &report.final_losses {
        let _ = writeln!(table, "{term:<16}{v:>16.6}");
    }
    print!("{table}");
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> featgen::Result<()> {
    let data = load_dataset(&a.data)?;
    let model = load_model(&a.model)?;
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(n) = a.per_class {
        cfg.per_class = n;
    }
    cfg.generator = model.config.clone();
    let mode = match a.mode {
        ModeArg::Zsc => EvalMode::Zsc,
        ModeArg::Gzsc => EvalMode::Gzsc,
    };
    let master = Rng::new(a.seed.unwrap_or(cfg.seed));
    let (report, _) = evaluate_model(&data, &model, &cfg, mode, &master)?;
    write_json(&a.report, &report)?;
    print!("{}", report.render());
    Ok(())
}

fn render_cv(cv: &CvResult) -> String {
    let mut out = format!("{:<10}{:<16}{:>10}\n", "candidate", "model", "accuracy");
    for (i, c) in cv.candidates.iter().enumerate() {
        let mark = if i == cv.selected { " *" } else { "" };
        let _ = writeln!(
            out,
            "{:<10}{:<16}{:>10.4}{mark}",
            i,
            c.config.generator.model_kind.name(),
            c.accuracy
        );
    }
    out
}

fn cmd_cv(a: CvArgs) -> featgen::Result<()> {
    let data = load_dataset(&a.data)?;
    let grid: Vec<RunConfig> = parse_json(&a.grid)?;
    let opts = CvOptions {
        holdout_fraction: a.holdout,
        folds: a.folds,
    };
    eprintln!("cross-validating {} candidates over {} fold(s)", grid.len(), opts.folds);
    let cv = zsc_cross_validate_folds(&data, &grid, &opts, &Rng::new(a.seed))?;
    write_json(&a.report, &cv)?;
    print!("{}", render_cv(&cv));
    Ok(())
}

fn dataset_name(manifest: &Path) -> String {
    manifest
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| manifest.display().to_string())
}

fn cmd_compare(a: CompareArgs) -> featgen::Result<()> {
    let cfgs: Vec<RunConfig> = parse_json(&a.configs)?;
    let master = Rng::new(a.seed);
    let mut sets: Vec<(String, Dataset)> = Vec::with_capacity(a.data.len());
    for (i, path) in a.data.iter().enumerate() {
        let data = load_dataset(path)?;
        let data = match a.split {
            SplitArg::Validation => pseudo_split(&data, a.holdout, &master.derive(i as u64))?,
            SplitArg::Test => data,
        };
        sets.push((dataset_name(path), data));
    }
    eprintln!("comparing {} configs on {} dataset(s)", cfgs.len(), sets.len());
    let table = compare_generators(&sets, &cfgs, &master)?;
    write_json(&a.report, &table)?;
    print!("{}", table.render());
    Ok(())
}
