// SPDX-License-Identifier: MIT OR Apache-2.0

//! Probe checkpoints and the registry that indexes them.
//!
//! ```text
//! "APRB" | u32 version | u64 meta_len | meta JSON | W (K*d f32) | b (K f32) | "APRB"
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{class_order, ProbeParams, TrainSpec};
use crate::activations::Stream;
use crate::error::{Error, Result};
use crate::fsutil::write_if_changed;
use crate::graph::Aspect;

pub const APRB_MAGIC: &[u8; 4] = b"APRB";
const APRB_VERSION: u32 = 1;

/// Identifies one probe of a sweep. `position` is set for text-part probes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProbeKey {
    pub aspect: Aspect,
    pub stream: Stream,
    pub layer: u32,
    pub position: Option<usize>,
}

impl ProbeKey {
    /// Path of the checkpoint relative to the probe root.
    pub fn file_name(&self) -> String {
        let pos = self.position.map(|t| format!("_pos{t}")).unwrap_or_default();
        format!("{}/{}/layer{}{pos}.aprb", self.aspect.name(), self.stream.name(), self.layer)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCheckpoint {
    pub key: ProbeKey,
    pub params: ProbeParams,
    pub spec: TrainSpec,
    pub best_val_accuracy: f64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    key: ProbeKey,
    class_order: Vec<String>,
    d: usize,
    train_spec: TrainSpec,
    best_val_accuracy: f64,
}

impl ProbeCheckpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.params.validate()?;
        let meta = serde_json::to_vec(&CheckpointMeta {
            key: self.key,
            class_order: self.params.class_order(),
            d: self.params.d,
            train_spec: self.spec.clone(),
            best_val_accuracy: self.best_val_accuracy,
        })?;
        let mut out = Vec::with_capacity(20 + meta.len() + 4 * (self.params.weights.len() + self.params.bias.len()));
        out.extend_from_slice(APRB_MAGIC);
        out.extend_from_slice(&APRB_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        for v in self.params.weights.iter().chain(&self.params.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(APRB_MAGIC);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad_magic = Error::BadMagic { expected: "APRB" };
        if bytes.len() < 20 || &bytes[..4] != APRB_MAGIC || &bytes[bytes.len() - 4..] != APRB_MAGIC {
            return Err(bad_magic);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != APRB_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let meta_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes.len() - 20;
        if meta_len > body {
            return Err(Error::Corrupt(format!("metadata length {meta_len} exceeds file")));
        }
        let meta: CheckpointMeta = serde_json::from_slice(&bytes[16..16 + meta_len])?;
        let aspect = meta.key.aspect;
        if meta.class_order != class_order(aspect) {
            return Err(Error::Corrupt(format!("class order does not match {aspect}")));
        }
        let k = aspect.num_classes();
        let floats = (body - meta_len) / 4;
        if (body - meta_len) % 4 != 0 || floats != k * meta.d + k {
            return Err(Error::Corrupt(format!(
                "{} payload bytes for a {k} x {} probe",
                body - meta_len,
                meta.d
            )));
        }
        let values: Vec<f32> = bytes[16 + meta_len..bytes.len() - 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let params = ProbeParams {
            aspect,
            d: meta.d,
            weights: values[..k * meta.d].to_vec(),
            bias: values[k * meta.d..].to_vec(),
        };
        params.validate()?;
        Ok(Self {
            key: meta.key,
            params,
            spec: meta.train_spec,
            best_val_accuracy: meta.best_val_accuracy,
        })
    }
}

/// Writes a checkpoint; returns whether the file changed.
pub fn write_probe(path: &Path, ckpt: &ProbeCheckpoint) -> Result<bool> {
    Ok(write_if_changed(path, &ckpt.to_bytes()?)?)
}

pub fn read_probe(path: &Path) -> Result<ProbeCheckpoint> {
    ProbeCheckpoint::from_bytes(&std::fs::read(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    #[serde(flatten)]
    pub key: ProbeKey,
    pub file: String,
    pub best_val_accuracy: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
}

/// JSON index of trained probes, kept sorted by key.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeRegistry {
    pub entries: Vec<RegistryEntry>,
}

impl ProbeRegistry {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<bool> {
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        Ok(write_if_changed(path, json.as_bytes())?)
    }

    pub fn get(&self, key: &ProbeKey) -> Option<&RegistryEntry> {
        self.entries
            .binary_search_by(|e| e.key.cmp(key))
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn insert(&mut self, ckpt: &ProbeCheckpoint) {
        let entry = RegistryEntry {
            key: ckpt.key,
            file: ckpt.key.file_name(),
            best_val_accuracy: ckpt.best_val_accuracy,
            batch_size: ckpt.spec.batch_size,
            learning_rate: ckpt.spec.learning_rate,
        };
        match self.entries.binary_search_by(|e| e.key.cmp(&ckpt.key)) {
            Ok(i) => self.entries[i] = entry,
            Err(i) => self.entries.insert(i, entry),
        }
    }
}
