// SPDX-License-Identifier: MIT OR Apache-2.0

//! Probe accuracy grids, subset aggregation, chance thresholds and VQA
//! scoring.

mod report;

pub use report::{emit_reports, format_sig6, SummaryRow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activations::{Activations, Stream};
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::graph::Aspect;
use crate::probe::ProbeParams;

/// Per-subset accuracy for every `(layer, position)` cell. `values` is
/// row-major by layer: `values[layer_index * positions + t]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyGrid {
    pub aspect: Aspect,
    pub stream: Stream,
    pub subset: u32,
    pub layers: Vec<u32>,
    pub positions: usize,
    pub grid: Option<(usize, usize)>,
    /// Samples scored per cell.
    pub n_eval: usize,
    pub values: Vec<f64>,
}

impl AccuracyGrid {
    pub fn new(aspect: Aspect, stream: Stream, subset: u32, layers: Vec<u32>, positions: usize, grid: Option<(usize, usize)>) -> Self {
        let values = vec![0.0; layers.len() * positions];
        Self {
            aspect,
            stream,
            subset,
            layers,
            positions,
            grid,
            n_eval: 0,
            values,
        }
    }

    fn layer_index(&self, layer: u32) -> Result<usize> {
        self.layers.iter().position(|&l| l == layer).ok_or(Error::IndexOutOfRange {
            what: "layer",
            index: layer as u64,
            limit: self.layers.len() as u64,
        })
    }

    pub fn row(&self, layer: u32) -> Result<&[f64]> {
        let i = self.layer_index(layer)?;
        Ok(&self.values[i * self.positions..(i + 1) * self.positions])
    }

    pub fn set_row(&mut self, layer: u32, accs: &[f64]) -> Result<()> {
        if accs.len() != self.positions {
            return Err(Error::DimensionMismatch {
                expected: self.positions,
                actual: accs.len(),
            });
        }
        let i = self.layer_index(layer)?;
        self.values[i * self.positions..(i + 1) * self.positions].copy_from_slice(accs);
        Ok(())
    }

    pub fn get(&self, layer: u32, t: usize) -> Result<f64> {
        self.row(layer)?.get(t).copied().ok_or(Error::IndexOutOfRange {
            what: "position",
            index: t as u64,
            limit: self.positions as u64,
        })
    }

    pub fn set(&mut self, layer: u32, t: usize, acc: f64) -> Result<()> {
        let i = self.layer_index(layer)?;
        if t >= self.positions {
            return Err(Error::IndexOutOfRange {
                what: "position",
                index: t as u64,
                limit: self.positions as u64,
            });
        }
        self.values[i * self.positions + t] = acc;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.layers.len() * self.positions {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} layers x {} positions",
                self.values.len(),
                self.layers.len(),
                self.positions
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("accuracy {v} outside [0, 1]")));
        }
        Ok(())
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.aspect == other.aspect
            && self.stream == other.stream
            && self.layers == other.layers
            && self.positions == other.positions
    }
}

fn check_shared_shape(grids: &[AccuracyGrid]) -> Result<&AccuracyGrid> {
    let first = grids.first().ok_or_else(|| Error::NoData("no accuracy grids".into()))?;
    if let Some(g) = grids.iter().find(|g| !g.same_shape(first)) {
        return Err(Error::ShapeMismatch(format!(
            "subset {} grid differs in shape from subset {}",
            g.subset, first.subset
        )));
    }
    Ok(first)
}

/// Mean over subsets of the accuracy at one cell.
pub fn mean_acc(grids: &[AccuracyGrid], layer: u32, t: usize) -> Result<f64> {
    check_shared_shape(grids)?;
    let mut sum = 0.0;
    for g in grids {
        sum += g.get(layer, t)?;
    }
    Ok(sum / grids.len() as f64)
}

/// Mean over subsets of each subset's best position at `layer`.
pub fn max_acc(grids: &[AccuracyGrid], layer: u32) -> Result<f64> {
    check_shared_shape(grids)?;
    let mut sum = 0.0;
    for g in grids {
        sum += g.row(layer)?.iter().copied().fold(0.0, f64::max);
    }
    Ok(sum / grids.len() as f64)
}

/// Subset-mean accuracy of every position at `layer`.
pub fn mean_row(grids: &[AccuracyGrid], layer: u32) -> Result<Vec<f64>> {
    let first = check_shared_shape(grids)?;
    (0..first.positions).map(|t| mean_acc(grids, layer, t)).collect()
}

/// Chance accuracy over the aspect labels, excluding the target-absent class.
pub fn threshold(aspect: Aspect) -> f64 {
    1.0 / aspect.num_labels() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub values: BTreeMap<Aspect, f64>,
}

impl ThresholdTable {
    pub fn standard() -> Self {
        Self {
            values: Aspect::ALL.into_iter().map(|a| (a, threshold(a))).collect(),
        }
    }

    /// One threshold for every aspect.
    pub fn uniform(tau: f64) -> Self {
        Self {
            values: Aspect::ALL.into_iter().map(|a| (a, tau)).collect(),
        }
    }

    pub fn get(&self, aspect: Aspect) -> f64 {
        self.values.get(&aspect).copied().unwrap_or_else(|| threshold(aspect))
    }
}

impl Default for ThresholdTable {
    fn default() -> Self {
        Self::standard()
    }
}

fn check_eval_inputs<A: Activations + ?Sized>(probe: &ProbeParams, dump: &A, manifest: &DatasetManifest) -> Result<()> {
    let meta = dump.meta();
    if probe.aspect != manifest.aspect {
        return Err(Error::InvalidArgument(format!(
            "{} probe cannot score a {} manifest",
            probe.aspect, manifest.aspect
        )));
    }
    if probe.d != meta.hidden {
        return Err(Error::DimensionMismatch {
            expected: meta.hidden,
            actual: probe.d,
        });
    }
    if meta.n_samples != manifest.len() {
        return Err(Error::LengthMismatch {
            left: meta.n_samples,
            right: manifest.len(),
        });
    }
    if manifest.is_empty() {
        return Err(Error::NoData("empty evaluation manifest".into()));
    }
    Ok(())
}

/// Fraction of samples whose prediction at `(layer, position)` equals gold.
pub fn eval_probe<A: Activations + ?Sized>(
    probe: &ProbeParams,
    dump: &A,
    manifest: &DatasetManifest,
    layer: u32,
    position: usize,
) -> Result<f64> {
    check_eval_inputs(probe, dump, manifest)?;
    let d = dump.meta().hidden;
    if position >= dump.meta().positions {
        return Err(Error::IndexOutOfRange {
            what: "position",
            index: position as u64,
            limit: dump.meta().positions as u64,
        });
    }
    let mut hits = 0;
    for (i, s) in manifest.samples.iter().enumerate() {
        let block = dump.block(i, layer)?;
        let pred = probe.predict_index(&block[position * d..(position + 1) * d]);
        hits += usize::from(pred == s.gold.class_index(manifest.aspect));
    }
    Ok(hits as f64 / manifest.len() as f64)
}

/// [`eval_probe`] at every position of `layer`, reading each block once.
pub fn eval_layer<A: Activations + ?Sized>(probe: &ProbeParams, dump: &A, manifest: &DatasetManifest, layer: u32) -> Result<Vec<f64>> {
    check_eval_inputs(probe, dump, manifest)?;
    let d = dump.meta().hidden;
    let mut hits = vec![0usize; dump.meta().positions];
    for (i, s) in manifest.samples.iter().enumerate() {
        let gold = s.gold.class_index(manifest.aspect);
        let block = dump.block(i, layer)?;
        for (h, row) in hits.iter_mut().zip(block.chunks_exact(d)) {
            *h += usize::from(probe.predict_index(row) == gold);
        }
    }
    Ok(hits.into_iter().map(|h| h as f64 / manifest.len() as f64).collect())
}

/// Case-insensitive substring match. A label contained in a longer word also
/// counts, so "red" matches "reddish".
pub fn vqa_match(answer: &str, gold: &str) -> bool {
    answer.to_lowercase().contains(&gold.to_lowercase())
}

/// Fraction of answers containing the sample's gold label.
pub fn vqa_accuracy(answers: &[String], manifest: &DatasetManifest) -> Result<f64> {
    if answers.len() != manifest.len() {
        return Err(Error::LengthMismatch {
            left: answers.len(),
            right: manifest.len(),
        });
    }
    if manifest.is_empty() {
        return Err(Error::NoData("empty manifest".into()));
    }
    let hits = answers
        .iter()
        .zip(&manifest.samples)
        .filter(|(a, s)| vqa_match(a, s.gold.text(manifest.aspect)))
        .count();
    Ok(hits as f64 / answers.len() as f64)
}

pub fn mean(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::NoData("no values to average".into()));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{DumpMeta, MemoryDump, ADMP_VERSION};
    use crate::dataset::{DatasetBuilder, Variant};

    fn grid(subset: u32, row: &[f64]) -> AccuracyGrid {
        let mut g = AccuracyGrid::new(Aspect::EdgeExistence, Stream::VisionEncoder, subset, vec![4], row.len(), None);
        g.set_row(4, row).unwrap();
        g
    }

    #[test]
    fn mean_of_max_differs_from_max_of_mean() {
        let grids = [grid(0, &[0.9, 0.1]), grid(1, &[0.1, 0.9])];
        assert_eq!(max_acc(&grids, 4).unwrap(), 0.9);
        assert_eq!(mean_row(&grids, 4).unwrap(), vec![0.5, 0.5]);
        assert_eq!(mean_acc(&[grid(0, &[0.4]), grid(1, &[0.6])], 4, 0).unwrap(), 0.5);
    }

    #[test]
    fn shape_and_emptiness_errors() {
        assert!(matches!(max_acc(&[], 4), Err(Error::NoData(_))));
        assert!(matches!(max_acc(&[grid(0, &[0.1]), grid(1, &[0.1, 0.2])], 4), Err(Error::ShapeMismatch(_))));
        assert!(max_acc(&[grid(0, &[0.1])], 5).is_err());
    }

    #[test]
    fn standard_thresholds() {
        let t = ThresholdTable::standard();
        assert_eq!(t.get(Aspect::NodeColor), 0.125);
        assert_eq!(t.get(Aspect::EdgeColor), 0.125);
        assert_eq!(t.get(Aspect::NodeShape), 0.2);
        assert_eq!(t.get(Aspect::EdgeCount), 0.2);
        assert_eq!(t.get(Aspect::MultiHopPath), 0.5);
        assert_eq!(ThresholdTable::uniform(0.3).get(Aspect::NodeColor), 0.3);
    }

    #[test]
    fn vqa_substring_rule() {
        assert!(vqa_match("The color is Red.", "red"));
        assert!(vqa_match("reddish-brown", "red"));
        assert!(!vqa_match("blue", "red"));
        // known false positive of the rule for the two existence aspects
        assert!(vqa_match("not exist", "exist"));
        assert!(!vqa_match("exist", "not exist"));
        let m = DatasetBuilder::default().build_variant(Aspect::NodeShape, Variant::Fix(0), 1, 0).unwrap();
        let golds: Vec<String> = m.samples.iter().map(|s| s.gold.text(m.aspect).to_owned()).collect();
        assert_eq!(vqa_accuracy(&golds, &m).unwrap(), 1.0);
        assert!(matches!(vqa_accuracy(&golds[1..], &m), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn constant_probes_score_as_expected() {
        let m = DatasetBuilder::default().build_variant(Aspect::NodeColor, Variant::Fix(0), 2, 0).unwrap();
        let meta = DumpMeta {
            model_id: "t".into(),
            stream: Stream::VisionEncoder,
            n_samples: m.len(),
            layer_ids: vec![0],
            positions: 2,
            hidden: 3,
            grid: Some((1, 2)),
            token_strings: None,
            manifest_ref: String::new(),
            dump_version: ADMP_VERSION,
        };
        let dump = MemoryDump::zeros(meta).unwrap();
        let mut red = ProbeParams::zeros(Aspect::NodeColor, 3);
        red.bias[0] = 1.0;
        assert_eq!(eval_probe(&red, &dump, &m, 0, 1).unwrap(), 0.125);
        assert_eq!(eval_layer(&red, &dump, &m, 0).unwrap(), vec![0.125, 0.125]);
        let mut bottom = ProbeParams::zeros(Aspect::NodeColor, 3);
        bottom.bias[8] = 1.0;
        assert_eq!(eval_probe(&bottom, &dump, &m, 0, 0).unwrap(), 0.0);
        assert!(matches!(eval_probe(&ProbeParams::zeros(Aspect::NodeColor, 2), &dump, &m, 0, 0), Err(Error::DimensionMismatch { .. })));
    }
}
