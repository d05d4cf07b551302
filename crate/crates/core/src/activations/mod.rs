// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hidden-state dumps and the ADMP binary interchange format.
//!
//! A dump holds one dense `[T x d]` float32 block per `(sample, layer)` pair,
//! stored sample-major in the order of `DumpMeta::layer_ids`.

mod format;

pub use format::{write_dump, DumpReader, DumpWriter, ADMP_MAGIC, ADMP_VERSION};

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which part of the model produced the hidden states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    VisionEncoder,
    LanguageModelImage,
    LanguageModelText,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::VisionEncoder, Stream::LanguageModelImage, Stream::LanguageModelText];

    pub fn name(self) -> &'static str {
        match self {
            Stream::VisionEncoder => "vision_encoder",
            Stream::LanguageModelImage => "language_model_image",
            Stream::LanguageModelText => "language_model_text",
        }
    }

    pub fn is_image(self) -> bool {
        !matches!(self, Stream::LanguageModelText)
    }
}

impl std::str::FromStr for Stream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stream::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stream {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpMeta {
    pub model_id: String,
    pub stream: Stream,
    pub n_samples: usize,
    pub layer_ids: Vec<u32>,
    /// Positions per layer.
    #[serde(rename = "T")]
    pub positions: usize,
    /// Hidden width.
    #[serde(rename = "d")]
    pub hidden: usize,
    /// `(rows, cols)` patch grid, row-major.
    pub grid: Option<(usize, usize)>,
    pub token_strings: Option<Vec<String>>,
    pub manifest_ref: String,
    pub dump_version: u32,
}

impl DumpMeta {
    pub fn validate(&self) -> Result<()> {
        if self.positions == 0 || self.hidden == 0 {
            return Err(Error::ShapeMismatch("T and d must be positive".into()));
        }
        if let Some((rows, cols)) = self.grid {
            if rows * cols != self.positions {
                return Err(Error::ShapeMismatch(format!(
                    "grid {rows}x{cols} does not cover T = {}",
                    self.positions
                )));
            }
        }
        if let Some(tokens) = &self.token_strings {
            if tokens.len() != self.positions {
                return Err(Error::ShapeMismatch(format!(
                    "{} token strings for T = {}",
                    tokens.len(),
                    self.positions
                )));
            }
        }
        let mut ids = self.layer_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.layer_ids.len() || ids.is_empty() {
            return Err(Error::ShapeMismatch("layer ids must be non-empty and unique".into()));
        }
        Ok(())
    }

    pub fn block_len(&self) -> usize {
        self.positions * self.hidden
    }

    pub fn block_count(&self) -> usize {
        self.n_samples * self.layer_ids.len()
    }

    pub fn layer_index(&self, layer_id: u32) -> Result<usize> {
        self.layer_ids
            .iter()
            .position(|&l| l == layer_id)
            .ok_or(Error::IndexOutOfRange {
                what: "layer",
                index: layer_id as u64,
                limit: self.layer_ids.len() as u64,
            })
    }

    pub(crate) fn block_index(&self, sample: usize, layer_id: u32) -> Result<usize> {
        if sample >= self.n_samples {
            return Err(Error::IndexOutOfRange {
                what: "sample",
                index: sample as u64,
                limit: self.n_samples as u64,
            });
        }
        Ok(sample * self.layer_ids.len() + self.layer_index(layer_id)?)
    }
}

/// Row-major `(row, col)` of position `t`.
pub fn position_to_grid(meta: &DumpMeta, t: usize) -> Result<(usize, usize)> {
    let (_, cols) = meta.grid.ok_or(Error::NoGrid)?;
    if t >= meta.positions {
        return Err(Error::IndexOutOfRange {
            what: "position",
            index: t as u64,
            limit: meta.positions as u64,
        });
    }
    Ok((t / cols, t % cols))
}

/// Read access to `[T x d]` blocks.
pub trait Activations {
    fn meta(&self) -> &DumpMeta;

    fn block(&self, sample: usize, layer_id: u32) -> Result<Cow<'_, [f32]>>;
}

/// A dump held entirely in memory.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryDump {
    meta: DumpMeta,
    data: Vec<f32>,
}

impl MemoryDump {
    /// Zero-filled dump.
    pub fn zeros(meta: DumpMeta) -> Result<Self> {
        meta.validate()?;
        let data = vec![0.0; meta.block_count() * meta.block_len()];
        Ok(Self { meta, data })
    }

    pub fn from_parts(meta: DumpMeta, data: Vec<f32>) -> Result<Self> {
        meta.validate()?;
        let expected = meta.block_count() * meta.block_len();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!("{} values for {expected} expected", data.len())));
        }
        Ok(Self { meta, data })
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    fn range(&self, sample: usize, layer_id: u32) -> Result<std::ops::Range<usize>> {
        let k = self.meta.block_index(sample, layer_id)?;
        let n = self.meta.block_len();
        Ok(k * n..(k + 1) * n)
    }

    pub fn block_ref(&self, sample: usize, layer_id: u32) -> Result<&[f32]> {
        let r = self.range(sample, layer_id)?;
        Ok(&self.data[r])
    }

    pub fn block_mut(&mut self, sample: usize, layer_id: u32) -> Result<&mut [f32]> {
        let r = self.range(sample, layer_id)?;
        Ok(&mut self.data[r])
    }

    /// Blocks in storage order.
    pub fn blocks(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.meta.block_len())
    }

    /// Serialized ADMP bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        let mut w = DumpWriter::new(&mut buf, self.meta.clone()).expect("validated meta");
        for b in self.blocks() {
            w.push_block(b).expect("block sizes match meta");
        }
        w.finish().expect("all blocks written");
        buf
    }
}

impl Activations for MemoryDump {
    fn meta(&self) -> &DumpMeta {
        &self.meta
    }

    fn block(&self, sample: usize, layer_id: u32) -> Result<Cow<'_, [f32]>> {
        self.block_ref(sample, layer_id).map(Cow::Borrowed)
    }
}

#[cfg(test)]
pub(crate) fn test_meta(n: usize, layers: Vec<u32>, t: usize, d: usize) -> DumpMeta {
    DumpMeta {
        model_id: "test".into(),
        stream: Stream::VisionEncoder,
        n_samples: n,
        layer_ids: layers,
        positions: t,
        hidden: d,
        grid: None,
        token_strings: None,
        manifest_ref: String::new(),
        dump_version: ADMP_VERSION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_mapping() {
        let meta = DumpMeta {
            grid: Some((16, 16)),
            ..test_meta(1, vec![0], 256, 4)
        };
        assert_eq!(position_to_grid(&meta, 0).unwrap(), (0, 0));
        assert_eq!(position_to_grid(&meta, 16).unwrap(), (1, 0));
        assert_eq!(position_to_grid(&meta, 255).unwrap(), (15, 15));
        assert!(position_to_grid(&meta, 256).is_err());
        assert!(matches!(position_to_grid(&test_meta(1, vec![0], 256, 4), 0), Err(Error::NoGrid)));
    }

    #[test]
    fn meta_validation() {
        let bad_grid = DumpMeta {
            grid: Some((3, 3)),
            ..test_meta(1, vec![0], 8, 2)
        };
        assert!(bad_grid.validate().is_err());
        let bad_tokens = DumpMeta {
            token_strings: Some(vec!["a".into()]),
            ..test_meta(1, vec![0], 2, 2)
        };
        assert!(bad_tokens.validate().is_err());
        assert!(test_meta(1, vec![1, 1], 2, 2).validate().is_err());
    }

    #[test]
    fn block_indexing() {
        let mut dump = MemoryDump::zeros(test_meta(2, vec![3, 7], 2, 2)).unwrap();
        dump.block_mut(1, 7).unwrap().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(&dump.data()[12..16], &[1.0, 2.0, 3.0, 4.0]);
        assert!(dump.block_ref(2, 3).is_err());
        assert!(dump.block_ref(0, 5).is_err());
    }
}
