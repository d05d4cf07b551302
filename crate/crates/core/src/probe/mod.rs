// SPDX-License-Identifier: MIT OR Apache-2.0

//! Linear probes over the aspect labels plus the target-absent class.
//!
//! A probe maps one hidden state `h` to `argmax(W h + b)` over the aspect's
//! labels followed by [`BOTTOM_TEXT`]. Ties go to the lowest class index.

mod checkpoint;
mod train;

pub use checkpoint::{read_probe, write_probe, ProbeCheckpoint, ProbeKey, ProbeRegistry, RegistryEntry, APRB_MAGIC};
pub use train::{loss_and_grad, search_and_train, train_probe, Regime, TrainOutcome, TrainSpec};

use serde::{Deserialize, Serialize};

use crate::activations::{Activations, Stream};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::graph::{Aspect, AspectLabel, BOTTOM_TEXT};

/// Weights of one probe. `weights` is row-major `(|Y|+1) x d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeParams {
    pub aspect: Aspect,
    pub d: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl ProbeParams {
    pub fn zeros(aspect: Aspect, d: usize) -> Self {
        let k = aspect.num_classes();
        Self {
            aspect,
            d,
            weights: vec![0.0; k * d],
            bias: vec![0.0; k],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    /// Aspect labels in canonical order, then the target-absent class.
    pub fn class_order(&self) -> Vec<String> {
        class_order(self.aspect)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.aspect.num_classes();
        if self.bias.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: self.bias.len(),
            });
        }
        if self.weights.len() != k * self.d {
            return Err(Error::DimensionMismatch {
                expected: k * self.d,
                actual: self.weights.len(),
            });
        }
        if !self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("probe parameters".into()));
        }
        Ok(())
    }

    pub fn logits(&self, h: &[f32]) -> Result<Vec<f32>> {
        if h.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: h.len(),
            });
        }
        Ok(self.logits_unchecked(h))
    }

    fn logits_unchecked(&self, h: &[f32]) -> Vec<f32> {
        self.weights
            .chunks_exact(self.d)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(h).fold(*b, |acc, (w, x)| acc + w * x))
            .collect()
    }

    pub(crate) fn predict_index(&self, h: &[f32]) -> usize {
        argmax_first(&self.logits_unchecked(h))
    }

    pub fn predict(&self, h: &[f32]) -> Result<AspectLabel> {
        let z = self.logits(h)?;
        Ok(AspectLabel::from_class_index(self.aspect, argmax_first(&z)))
    }
}

pub fn class_order(aspect: Aspect) -> Vec<String> {
    aspect
        .labels()
        .iter()
        .copied()
        .chain([BOTTOM_TEXT])
        .map(str::to_owned)
        .collect()
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax_first(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}

/// Feature vectors with class-index labels, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeInstances {
    pub aspect: Aspect,
    pub d: usize,
    pub features: Vec<f32>,
    pub labels: Vec<usize>,
}

impl ProbeInstances {
    pub fn new(aspect: Aspect, d: usize) -> Self {
        Self {
            aspect,
            d,
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push(&mut self, h: &[f32], label: AspectLabel) -> Result<()> {
        if h.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: h.len(),
            });
        }
        if !h.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite(format!("feature row {}", self.labels.len())));
        }
        self.features.extend_from_slice(h);
        self.labels.push(label.class_index(self.aspect));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self, i: usize) -> &[f32] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    pub fn label(&self, i: usize) -> AspectLabel {
        AspectLabel::from_class_index(self.aspect, self.labels[i])
    }

    pub fn accuracy(&self, probe: &ProbeParams) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let hits = (0..self.len())
            .filter(|&i| probe.predict_index(self.features(i)) == self.labels[i])
            .count();
        hits as f64 / self.len() as f64
    }
}

/// Collects training instances from one layer of a dump.
///
/// `ImagePart` yields one instance per `(sample, position)` and takes no
/// position. `TextPart` yields one instance per sample at `position` and
/// needs a text-stream dump.
pub fn build_instances<A: Activations + ?Sized>(
    dump: &A,
    manifest: &DatasetManifest,
    regime: Regime,
    layer_id: u32,
    position: Option<usize>,
) -> Result<ProbeInstances> {
    let meta = dump.meta();
    match (regime, meta.stream) {
        (Regime::ImagePart, Stream::LanguageModelText) | (Regime::TextPart, Stream::VisionEncoder | Stream::LanguageModelImage) => {
            return Err(Error::StreamMismatch(format!(
                "{regime:?} probes cannot read a {} dump",
                meta.stream.name()
            )));
        }
        _ => {}
    }
    if meta.n_samples != manifest.len() {
        return Err(Error::LengthMismatch {
            left: meta.n_samples,
            right: manifest.len(),
        });
    }
    let d = meta.hidden;
    let mut out = ProbeInstances::new(manifest.aspect, d);
    match (regime, position) {
        (Regime::ImagePart, None) => {
            out.features.reserve(manifest.len() * meta.block_len());
            for (i, s) in manifest.samples.iter().enumerate() {
                let block = dump.block(i, layer_id)?;
                for row in block.chunks_exact(d) {
                    out.push(row, s.gold)?;
                }
            }
        }
        (Regime::TextPart, Some(t)) => {
            if t >= meta.positions {
                return Err(Error::IndexOutOfRange {
                    what: "position",
                    index: t as u64,
                    limit: meta.positions as u64,
                });
            }
            for (i, s) in manifest.samples.iter().enumerate() {
                let block = dump.block(i, layer_id)?;
                out.push(&block[t * d..(t + 1) * d], s.gold)?;
            }
        }
        (Regime::ImagePart, Some(_)) => return Err(Error::InvalidArgument("image-part probes train on all positions".into())),
        (Regime::TextPart, None) => return Err(Error::InvalidArgument("text-part probes need a position".into())),
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{test_meta, MemoryDump};
    use crate::dataset::{DatasetBuilder, Variant};

    #[test]
    fn zero_probe_picks_first_class() {
        let p = ProbeParams::zeros(Aspect::NodeColor, 3);
        assert_eq!(p.predict(&[1.0, -2.0, 0.5]).unwrap(), AspectLabel::Class(0));
        assert_eq!(p.class_order().last().unwrap(), BOTTOM_TEXT);
        assert!(matches!(p.predict(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bias_only_probe() {
        let mut p = ProbeParams::zeros(Aspect::NodeColor, 2);
        p.bias[8] = 1.0;
        assert_eq!(p.predict(&[3.0, 4.0]).unwrap(), AspectLabel::Bottom);
    }

    #[test]
    fn instance_counts_per_regime() {
        let m = DatasetBuilder::default().build_train(Aspect::EdgeStyle, 2, 1).unwrap();
        let mut meta = test_meta(m.len(), vec![0, 5], 6, 3);
        let dump = MemoryDump::zeros(meta.clone()).unwrap();
        let inst = build_instances(&dump, &m, Regime::ImagePart, 5, None).unwrap();
        assert_eq!(inst.len(), 8 * 6);
        assert_eq!(inst.labels.iter().filter(|&&l| l == 2).count(), 4 * 6);
        assert!(matches!(build_instances(&dump, &m, Regime::TextPart, 5, Some(1)), Err(Error::StreamMismatch(_))));

        meta.stream = Stream::LanguageModelText;
        let dump = MemoryDump::zeros(meta).unwrap();
        assert_eq!(build_instances(&dump, &m, Regime::TextPart, 0, Some(4)).unwrap().len(), 8);
        assert!(build_instances(&dump, &m, Regime::TextPart, 0, Some(6)).is_err());
        assert!(matches!(build_instances(&dump, &m, Regime::ImagePart, 0, None), Err(Error::StreamMismatch(_))));
        let fix = DatasetBuilder::default().build_variant(Aspect::EdgeStyle, Variant::Fix(0), 1, 1).unwrap();
        assert!(matches!(build_instances(&dump, &fix, Regime::TextPart, 0, Some(0)), Err(Error::LengthMismatch { .. })));
    }
}
