//! Checkpoint layout, little-endian throughout:
//!
//! ```text
//! magic     8 bytes "SAECF-CK"
//! version   u32
//! d         u64
//! items     u64
//! W_enc     d x items f32, row-major
//! b_enc     d f32
//! W_dec     items x d f32, row-major
//! b_dec     items f32
//! metadata  u64 byte length, UTF-8 JSON
//! ```

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Activation, ModelParams};
use crate::dataio::format::{read_file, Reader};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SAECF-CK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Metadata stored alongside the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epochs: usize,
    pub activation: Activation,
    /// Echo of the training configuration.
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn save_checkpoint(
    params: &ModelParams<f32>,
    meta: &CheckpointMeta,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let io = |e| Error::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    let (d, n) = (params.hidden_dim(), params.num_items());
    w.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&(d as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&(n as u64).to_le_bytes()).map_err(io)?;
    let mut put = |x: f32| w.write_all(&x.to_le_bytes());
    for h in 0..d {
        for i in 0..n {
            put(params.w_enc[i * d + h]).map_err(io)?;
        }
    }
    for &x in params
        .b_enc
        .iter()
        .chain(&params.w_dec)
        .chain(&params.b_dec)
    {
        put(x).map_err(io)?;
    }
    let meta = serde_json::to_vec(meta)?;
    w.write_all(&(meta.len() as u64).to_le_bytes())
        .map_err(io)?;
    w.write_all(&meta).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams<f32>, CheckpointMeta)> {
    let path = path.as_ref();
    let buf = read_file(path)?;
    let mut r = Reader::new(&buf);
    r.magic(CHECKPOINT_MAGIC)?;
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let d = r.len("hidden dimension")?;
    let n = r.len("item count")?;
    let cells = d
        .checked_mul(n)
        .ok_or_else(|| Error::Format("weight matrix size overflows".into()))?;
    let enc_t = r.f32_array(cells, "W_enc")?;
    let b_enc = r.f32_array(d, "b_enc")?;
    let w_dec = r.f32_array(cells, "W_dec")?;
    let b_dec = r.f32_array(n, "b_dec")?;
    let meta_len = r.len("metadata length")?;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len, "metadata")?)?;
    r.finish()?;
    let mut w_enc = vec![0.0f32; cells];
    for h in 0..d {
        for i in 0..n {
            w_enc[i * d + h] = enc_t[h * n + i];
        }
    }
    let params = ModelParams::from_parts(n, d, meta.activation, w_enc, b_enc, w_dec, b_dec)?;
    Ok((params, meta))
}
