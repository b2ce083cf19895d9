//! On-disk formats: `FGZ1` matrices, `FGZL` label vectors, and the JSON
//! dataset manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::binio::{read_file, to_u32, write_file, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MATRIX_MAGIC: &[u8; 4] = b"FGZ1";
pub const MATRIX_VERSION: u16 = 1;
pub const DTYPE_F64: u8 = 1;
pub const LABELS_MAGIC: &[u8; 4] = b"FGZL";
pub const LABELS_VERSION: u16 = 1;

pub fn encode_matrix(m: &Matrix) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    w.bytes(MATRIX_MAGIC);
    w.u16(MATRIX_VERSION);
    w.u8(DTYPE_F64);
    w.u8(0);
    w.u32(to_u32(m.rows(), "rows")?);
    w.u32(to_u32(m.cols(), "cols")?);
    w.f64_slice(m.data());
    Ok(w.into_inner())
}

pub fn decode_matrix(bytes: &[u8], source: &str) -> Result<Matrix> {
    let mut r = ByteReader::new(bytes, source);
    r.expect_magic(MATRIX_MAGIC)?;
    let at = r.offset();
    let version = r.u16("version")?;
    if version != MATRIX_VERSION {
        return Err(r.error_at(at, format!("unsupported matrix version {version}")));
    }
    let at = r.offset();
    let dtype = r.u8("dtype")?;
    if dtype != DTYPE_F64 {
        return Err(r.error_at(at, format!("unsupported dtype tag {dtype}")));
    }
    let at = r.offset();
    if r.u8("reserved byte")? != 0 {
        return Err(r.error_at(at, "reserved byte must be 0"));
    }
    let rows = r.u32("rows")? as usize;
    let cols = r.u32("cols")? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| r.error_at(12, "matrix size overflows"))?;
    let data = r.f64_vec(n, "matrix data")?;
    if !r.is_at_end() {
        return Err(r.error_at(r.offset(), "trailing bytes after matrix data"));
    }
    Matrix::from_vec(rows, cols, data)
}

pub fn encode_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    w.bytes(LABELS_MAGIC);
    w.u16(LABELS_VERSION);
    w.u32(to_u32(labels.len(), "label count")?);
    for &l in labels {
        w.u32(to_u32(l, "label")?);
    }
    Ok(w.into_inner())
}

pub fn decode_labels(bytes: &[u8], source: &str) -> Result<Vec<usize>> {
    let mut r = ByteReader::new(bytes, source);
    r.expect_magic(LABELS_MAGIC)?;
    let at = r.offset();
    let version = r.u16("version")?;
    if version != LABELS_VERSION {
        return Err(r.error_at(at, format!("unsupported labels version {version}")));
    }
    let count = r.u32("label count")? as usize;
    let mut labels = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        labels.push(r.u32("label")? as usize);
    }
    if !r.is_at_end() {
        return Err(r.error_at(r.offset(), "trailing bytes after labels"));
    }
    Ok(labels)
}

pub fn save_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_file(path, &encode_matrix(m)?)
}

pub fn load_matrix(path: &Path) -> Result<Matrix> {
    decode_matrix(&read_file(path)?, &path.display().to_string())
}

pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_file(path, &encode_labels(labels)?)
}

pub fn load_labels(path: &Path) -> Result<Vec<usize>> {
    decode_labels(&read_file(path)?, &path.display().to_string())
}

/// Dataset manifest. File references are relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub features: String,
    pub labels: String,
    pub class_attributes: String,
    pub class_names: Vec<String>,
    pub seen_classes: Vec<usize>,
    pub unseen_classes: Vec<usize>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes the dataset's files and `manifest.json` into `dir` and returns the
/// manifest path.
pub fn save_dataset(data: &Dataset, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        features: "features.fgz1".into(),
        labels: "labels.fgzl".into(),
        class_attributes: "class_attributes.fgz1".into(),
        class_names: data.class_names().to_vec(),
        seen_classes: data.seen_classes().to_vec(),
        unseen_classes: data.unseen_classes().to_vec(),
        train_indices: data.train_indices().to_vec(),
        test_indices: data.test_indices().to_vec(),
    };
    save_matrix(&dir.join(&manifest.features), data.features())?;
    save_labels(&dir.join(&manifest.labels), data.labels())?;
    save_matrix(&dir.join(&manifest.class_attributes), data.class_attributes())?;
    let path = dir.join(MANIFEST_FILE);
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    Ok(path)
}

/// Loads and fully validates a dataset from its manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", manifest_path.display())))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let features = load_matrix(&base.join(&manifest.features))?;
    let labels = load_labels(&base.join(&manifest.labels))?;
    let class_attributes = load_matrix(&base.join(&manifest.class_attributes))?;
    let seen: BTreeSet<_> = manifest.seen_classes.iter().collect();
    if let Some(c) = manifest.unseen_classes.iter().find(|c| seen.contains(c)) {
        return Err(Error::Split(format!("class {c} listed as both seen and unseen")));
    }
    Dataset::new(
        features,
        labels,
        class_attributes,
        manifest.class_names,
        manifest.seen_classes,
        manifest.unseen_classes,
        manifest.train_indices,
        manifest.test_indices,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_header_layout() {
        let m = Matrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        let b = encode_matrix(&m).unwrap();
        assert_eq!(&b[..4], b"FGZ1");
        assert_eq!(&b[4..6], &1u16.to_le_bytes());
        assert_eq!(b[6], 1);
        assert_eq!(b[7], 0);
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..16], &3u32.to_le_bytes());
        assert_eq!(&b[16..24], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 16 + 24);
        assert_eq!(decode_matrix(&b, "mem").unwrap(), m);
    }

    #[test]
    fn truncated_matrix_names_offset() {
        let m = Matrix::zeros(3, 2);
        let b = encode_matrix(&m).unwrap();
        let err = decode_matrix(&b[..30], "feat.fgz1").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Format { offset: 16, .. }), "{msg}");
        assert!(msg.contains("feat.fgz1") && msg.contains("byte 16"), "{msg}");
    }

    #[test]
    fn bad_dtype_and_trailing_bytes() {
        let m = Matrix::zeros(1, 1);
        let mut b = encode_matrix(&m).unwrap();
        b.push(0);
        assert!(matches!(decode_matrix(&b, "m"), Err(Error::Format { offset: 24, .. })));
        b.pop();
        b[6] = 2;
        assert!(matches!(decode_matrix(&b, "m"), Err(Error::Format { offset: 6, .. })));
    }

    #[test]
    fn labels_round_trip_and_truncation() {
        let labels = vec![0, 5, 2, 7];
        let b = encode_labels(&labels).unwrap();
        assert_eq!(decode_labels(&b, "l").unwrap(), labels);
        assert!(matches!(
            decode_labels(&b[..b.len() - 1], "l"),
            Err(Error::Format { offset: 22, .. })
        ));
    }
}
