//! `FGZM` binary network records.
//!
//! Each record is: magic `FGZM`, `u16` version, `u32` layer count, then per
//! layer `u32` input dim, `u32` output dim, `u8` activation tag, `f64` leak,
//! `f64` dropout, weights row-major and biases, all little-endian `f64`.
//! A model file holds one or more records back to back; the JSON sidecar
//! names the role of each.

use std::path::Path;

use super::layer::{Activation, Dense, LayerSpec};
use super::mlp::Mlp;
use crate::binio::{read_file, to_u32, write_file, ByteReader, ByteWriter};
use crate::error::Result;
use crate::numerics::Matrix;

pub const MODEL_MAGIC: &[u8; 4] = b"FGZM";
pub const MODEL_VERSION: u16 = 1;

pub fn encode_nets(nets: &[&Mlp]) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    for net in nets {
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_VERSION);
        w.u32(to_u32(net.layers().len(), "layer count")?);
        for layer in net.layers() {
            let s = layer.spec;
            w.u32(to_u32(s.input_dim, "input dim")?);
            w.u32(to_u32(s.output_dim, "output dim")?);
            w.u8(s.activation.tag());
            w.f64(s.activation.leak());
            w.f64(s.dropout);
            w.f64_slice(layer.weights.data());
            w.f64_slice(&layer.biases);
        }
    }
    Ok(w.into_inner())
}

fn decode_one(r: &mut ByteReader<'_>) -> Result<Mlp> {
    let start = r.offset();
    r.expect_magic(MODEL_MAGIC)?;
    let at = r.offset();
    let version = r.u16("model version")?;
    if version != MODEL_VERSION {
        return Err(r.error_at(at, format!("unsupported model version {version}")));
    }
    let count = r.u32("layer count")? as usize;
    if count == 0 {
        return Err(r.error_at(start, "network record has no layers"));
    }
    let mut layers = Vec::with_capacity(count.min(1024));
    for i in 0..count {
        let layer_at = r.offset();
        let input_dim = r.u32("input dim")? as usize;
        let output_dim = r.u32("output dim")? as usize;
        let tag_at = r.offset();
        let tag = r.u8("activation tag")?;
        let leak = r.f64("leak")?;
        let dropout = r.f64("dropout")?;
        let activation = Activation::from_tag(tag, leak)
            .ok_or_else(|| r.error_at(tag_at, format!("unknown activation tag {tag}")))?;
        let spec = LayerSpec::new(input_dim, output_dim, activation, dropout);
        spec.validate(i).map_err(|e| r.error_at(layer_at, e.to_string()))?;
        let n = input_dim
            .checked_mul(output_dim)
            .ok_or_else(|| r.error_at(layer_at, "layer size overflows"))?;
        let weights = Matrix::from_vec(output_dim, input_dim, r.f64_vec(n, "weights")?)?;
        let biases = r.f64_vec(output_dim, "biases")?;
        layers.push(Dense { spec, weights, biases });
    }
    Mlp::from_layers(layers).map_err(|e| r.error_at(start, e.to_string()))
}

pub fn decode_nets(bytes: &[u8], source: &str) -> Result<Vec<Mlp>> {
    let mut r = ByteReader::new(bytes, source);
    let mut nets = vec![decode_one(&mut r)?];
    while !r.is_at_end() {
        nets.push(decode_one(&mut r)?);
    }
    Ok(nets)
}

pub fn save_nets(path: &Path, nets: &[&Mlp]) -> Result<()> {
    write_file(path, &encode_nets(nets)?)
}

pub fn load_nets(path: &Path) -> Result<Vec<Mlp>> {
    let bytes = read_file(path)?;
    decode_nets(&bytes, &path.display().to_string())
}
