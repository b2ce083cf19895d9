mod common;

use common::small_data;
use featgen::data::format::{load_matrix, save_matrix};
use featgen::data::{load_dataset, save_dataset, Manifest};
use featgen::{Error, Matrix};

#[test]
fn dataset_round_trip_is_identity() {
    let data = small_data(1);
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    assert_eq!(load_dataset(&manifest).unwrap(), data);
}

#[test]
fn truncated_feature_file_names_offset_and_path() {
    let data = small_data(2);
    let dir = tempfile::tempdir().unwrap();
    let manifest = save_dataset(&data, dir.path()).unwrap();
    let features = dir.path().join("features.fgz1");
    let bytes = std::fs::read(&features).unwrap();
    std::fs::write(&features, &bytes[..bytes.len() - 5]).unwrap();
    match load_dataset(&manifest) {
        Err(Error::Format { path, offset, .. }) => {
            assert!(path.ends_with("features.fgz1"));
            assert_eq!(offset, 16);
        }
        other => panic!("expected format error, got {other:?}"),
    }
    let err = load_dataset(&manifest).unwrap_err().to_string();
    assert!(err.contains("at byte 16"), "{err}");
}

#[test]
fn bad_magic_rejected_at_offset_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.fgz1");
    save_matrix(&path, &Matrix::identity(2)).unwrap();
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(load_matrix(&path), Err(Error::Format { offset: 0, .. })));
}

fn rewrite_manifest(dir: &std::path::Path, edit: impl FnOnce(&mut Manifest)) -> std::path::PathBuf {
    let path = dir.join("manifest.json");
    let mut m: Manifest = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut m);
    std::fs::write(&path, serde_json::to_string(&m).unwrap()).unwrap();
    path
}

#[test]
fn manifest_errors_are_distinct() {
    let data = small_data(3);
    let dir = tempfile::tempdir().unwrap();
    save_dataset(&data, dir.path()).unwrap();
    let unseen0 = data.unseen_classes()[0];
    let path = rewrite_manifest(dir.path(), |m| m.seen_classes.push(unseen0));
    assert!(matches!(load_dataset(&path), Err(Error::Split(_))));

    save_dataset(&data, dir.path()).unwrap();
    let path = rewrite_manifest(dir.path(), |m| m.class_names.pop().map(|_| ()).unwrap());
    assert!(matches!(load_dataset(&path), Err(Error::Data(_))));

    save_dataset(&data, dir.path()).unwrap();
    let path = rewrite_manifest(dir.path(), |m| m.features = "missing.fgz1".into());
    assert!(matches!(load_dataset(&path), Err(Error::Io { .. })));

    save_dataset(&data, dir.path()).unwrap();
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replacen('{', "{\"extra\": 1,", 1);
    std::fs::write(&path, text).unwrap();
    assert!(matches!(load_dataset(&path), Err(Error::Config(_))));
}

#[test]
fn preprocessing_keeps_train_features_in_unit_range() {
    let data = small_data(4);
    assert!(data.is_unit_scaled());
    let again = data.preprocessed().unwrap();
    assert!(again.is_unit_scaled());
}
