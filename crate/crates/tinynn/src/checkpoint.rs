//! Checkpoint format: a JSON manifest describing tensor names, shapes and
//! offsets, plus a flat blob of little-endian `f64` values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{NnError, ParamStore, Tensor};

pub const FORMAT: &str = "phg-tinynn-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ParamStore,
    /// Free-form run metadata (seeds, normalization statistics, config).
    pub meta: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    dtype: String,
    byte_order: String,
    /// Total number of `f64` values in the blob.
    values: usize,
    tensors: Vec<TensorEntry>,
    meta: serde_json::Value,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    /// Offset in values, not bytes.
    offset: usize,
}

fn bad(msg: impl Into<String>) -> NnError {
    NnError::Checkpoint(msg.into())
}

impl Checkpoint {
    /// Returns `(manifest JSON, parameter blob)`.
    pub fn encode(&self) -> (String, Vec<u8>) {
        let mut tensors = Vec::new();
        let mut blob = Vec::with_capacity(self.params.num_values() * 8);
        let mut offset = 0;
        for (name, t) in self.params.iter() {
            tensors.push(TensorEntry { name: name.to_owned(), shape: t.shape().to_vec(), offset });
            offset += t.len();
            for v in t.data() {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            dtype: "f64".into(),
            byte_order: "little".into(),
            values: offset,
            tensors,
            meta: self.meta.clone(),
        };
        let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        json.push('\n');
        (json, blob)
    }

    pub fn decode(manifest: &[u8], blob: &[u8]) -> Result<Self, NnError> {
        let m: Manifest = serde_json::from_slice(manifest).map_err(|e| bad(format!("manifest: {e}")))?;
        if m.format != FORMAT || m.version != VERSION {
            return Err(bad(format!("unsupported format {} v{}", m.format, m.version)));
        }
        if m.dtype != "f64" || m.byte_order != "little" {
            return Err(bad(format!("unsupported encoding {} {}", m.dtype, m.byte_order)));
        }
        if m.values.checked_mul(8) != Some(blob.len()) {
            return Err(bad(format!("blob has {} bytes, manifest promises {} values", blob.len(), m.values)));
        }
        let mut params = ParamStore::new();
        let mut expected_offset = 0usize;
        for entry in m.tensors {
            let len = entry
                .shape
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| bad(format!("{}: shape overflows", entry.name)))?;
            let end = entry.offset.checked_add(len).filter(|&e| e <= m.values);
            if entry.offset != expected_offset || end.is_none() {
                return Err(bad(format!("{}: offset {} out of place", entry.name, entry.offset)));
            }
            if params.find(&entry.name).is_some() {
                return Err(bad(format!("duplicate tensor {}", entry.name)));
            }
            let data: Vec<f64> = blob[entry.offset * 8..(entry.offset + len) * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            let t = Tensor::from_vec(&entry.shape, data)?;
            t.ensure_finite("checkpoint").map_err(|_| bad(format!("{}: non-finite value", entry.name)))?;
            expected_offset += len;
            params.add(entry.name, t);
        }
        if expected_offset != m.values {
            return Err(bad(format!("tensors cover {expected_offset} of {} values", m.values)));
        }
        Ok(Self { params, meta: m.meta })
    }

    /// Paths of the manifest and blob for a checkpoint stem.
    pub fn paths(dir: impl AsRef<Path>, stem: &str) -> (PathBuf, PathBuf) {
        let dir = dir.as_ref();
        (dir.join(format!("{stem}.json")), dir.join(format!("{stem}.bin")))
    }

    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(), NnError> {
        let (mpath, bpath) = Self::paths(dir, stem);
        let (manifest, blob) = self.encode();
        std::fs::write(mpath, manifest)?;
        std::fs::write(bpath, blob)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>, stem: &str) -> Result<Self, NnError> {
        let (mpath, bpath) = Self::paths(dir, stem);
        let manifest = std::fs::read(&mpath).map_err(|e| bad(format!("{}: {e}", mpath.display())))?;
        let blob = std::fs::read(&bpath).map_err(|e| bad(format!("{}: {e}", bpath.display())))?;
        Self::decode(&manifest, &blob)
    }
}
