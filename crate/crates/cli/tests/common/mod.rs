#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn featgen(args: &[&str]) -> Run {
    let out: Output = Command::new(env!("CARGO_BIN_EXE_featgen"))
        .args(args)
        .env("FEATGEN_THREADS", "1")
        .output()
        .expect("spawn featgen");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

pub fn ok(args: &[&str]) -> Run {
    let r = featgen(args);
    assert_eq!(r.code, 0, "featgen {args:?} failed:\n{}", r.stderr);
    r
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Writes a small synthetic benchmark into `dir/name` and returns the manifest.
pub fn small_dataset(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let out = dir.join(name);
    let seed = seed.to_string();
    ok(&[
        "synth",
        "--classes",
        "8",
        "--seen-count",
        "6",
        "--attr-dim",
        "4",
        "--feature-dim",
        "8",
        "--train-per-class",
        "30",
        "--test-per-class",
        "20",
        "--seed",
        &seed,
        "--out-dir",
        p(&out),
    ]);
    out.join("manifest.json")
}

pub fn fast_config_json(kind: &str, epochs: usize) -> String {
    format!(
        r#"{{"generator":{{"model_kind":"{kind}","hidden_dims":[32],"width_range":[8,2000],"learning_rate":0.001,"epochs":{epochs},"batch_size":32,"noise":{{"dim":4,"distribution":"gaussian"}}}},"classifier":{{"epochs":20}},"per_class":50}}"#
    )
}

pub fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_path_buf()
}
