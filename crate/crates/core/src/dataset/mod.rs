// SPDX-License-Identifier: MIT OR Apache-2.0

//! Class-balanced dataset variants.
//!
//! * `Rand`: random layouts, `n_per_class` samples per label.
//! * `Bottom`: target-absent graphs, as many as `Rand`.
//! * `Fix(j)`: every sample shares fixed layout `j`.
//! * `Train`: `Rand` followed by `Bottom`.
//!
//! Each sample carries its own seed, derived from the global seed and its
//! `(aspect, variant, class, index)` coordinates, so it can be regenerated
//! without the rest of the manifest.

mod manifest;
mod question;

pub use manifest::{read_manifest, render_sample, write_dataset, ManifestHeader, RenderedSample, MANIFEST_FILE};
pub use question::{question_for, question_template};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{derive_label, make_bottom_variant, sample_graph_with, Aspect, AspectLabel, DiagramGraph, SampleOptions};
use crate::render::{plan_layout, LayoutMode, LayoutPlan, RenderConfig};
use crate::seed::{derive_seed, tag};

pub const DEFAULT_N_PER_CLASS: usize = 100;
/// Default number of fixed-layout evaluation subsets.
pub const DEFAULT_SUBSETS: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Rand,
    Bottom,
    Fix(u32),
    Train,
}

impl Variant {
    pub fn slug(self) -> String {
        match self {
            Variant::Rand => "rand".into(),
            Variant::Bottom => "bottom".into(),
            Variant::Fix(j) => format!("fix{j}"),
            Variant::Train => "train".into(),
        }
    }

    fn seed_tag(self) -> u64 {
        match self {
            Variant::Fix(j) => derive_seed(&[tag("fix"), j as u64]),
            v => tag(&v.slug()),
        }
    }

    pub fn layout_mode(self) -> LayoutMode {
        match self {
            Variant::Fix(j) => LayoutMode::Fixed(j),
            _ => LayoutMode::Random,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.slug())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rand" => Ok(Variant::Rand),
            "bottom" => Ok(Variant::Bottom),
            "train" => Ok(Variant::Train),
            _ => s
                .strip_prefix("fix")
                .and_then(|j| j.parse().ok())
                .map(Variant::Fix)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}"))),
        }
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.slug())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One diagram/question pair.
#[derive(Clone, Debug, PartialEq)]
pub struct AspectSample {
    /// Position within the variant that generated it.
    pub index: usize,
    pub aspect: Aspect,
    pub gold: AspectLabel,
    pub question: String,
    pub seed: u64,
    pub layout_mode: LayoutMode,
    /// Variant that generated the sample (`Rand` or `Bottom` inside `Train`).
    pub origin: Variant,
    pub graph: DiagramGraph,
    pub layout: LayoutPlan,
}

impl AspectSample {
    /// Path stem relative to the dataset root, without extension.
    pub fn file_stem(&self) -> String {
        let v = self.origin.slug();
        format!("{}/{v}/{}_{v}_{}", self.aspect.name(), self.aspect.name(), self.index)
    }

    pub fn image_ref(&self) -> String {
        format!("{}.svg", self.file_stem())
    }

    pub fn raster_ref(&self) -> String {
        format!("{}.png", self.file_stem())
    }

    pub fn graph_ref(&self) -> String {
        format!("{}.json", self.file_stem())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub aspect: Aspect,
    pub variant: Variant,
    pub n_per_class: usize,
    pub global_seed: u64,
    pub samples: Vec<AspectSample>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Per-class counts in probe class order (labels, then target-absent).
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.aspect.num_classes()];
        for s in &self.samples {
            counts[s.gold.class_index(self.aspect)] += 1;
        }
        counts
    }
}

/// Builds dataset variants with shared rendering and sampling settings.
#[derive(Clone, Debug, Default)]
pub struct DatasetBuilder {
    pub render: RenderConfig,
    pub sampling: SampleOptions,
}

impl DatasetBuilder {
    pub fn new(render: RenderConfig) -> Self {
        Self {
            render,
            sampling: SampleOptions::default(),
        }
    }

    fn sample_seed(global: u64, aspect: Aspect, variant: Variant, class: usize, index: usize) -> u64 {
        derive_seed(&[global, aspect.index() as u64, variant.seed_tag(), class as u64, index as u64])
    }

    /// Regenerates one sample from its coordinates.
    pub fn regenerate(
        &self,
        aspect: Aspect,
        origin: Variant,
        gold: AspectLabel,
        index: usize,
        seed: u64,
    ) -> Result<AspectSample> {
        let graph = match gold {
            AspectLabel::Bottom => make_bottom_variant(aspect, seed),
            target => sample_graph_with(aspect, target, seed, &self.sampling)?,
        };
        let mode = origin.layout_mode();
        let layout = plan_layout(&graph, mode, seed, &self.render)?;
        Ok(AspectSample {
            index,
            aspect,
            gold,
            question: question_for(aspect),
            seed,
            layout_mode: mode,
            origin,
            graph,
            layout,
        })
    }

    /// Builds a `Rand`, `Bottom` or `Fix(j)` variant.
    pub fn build_variant(
        &self,
        aspect: Aspect,
        variant: Variant,
        n_per_class: usize,
        seed: u64,
    ) -> Result<DatasetManifest> {
        if n_per_class == 0 {
            return Err(Error::InvalidArgument("n_per_class must be at least 1".into()));
        }
        if variant == Variant::Train {
            return self.build_train(aspect, n_per_class, seed);
        }
        let labels = aspect.num_labels();
        let mut samples = Vec::with_capacity(labels * n_per_class);
        for class in 0..labels {
            for k in 0..n_per_class {
                let index = samples.len();
                let gold = match variant {
                    Variant::Bottom => AspectLabel::Bottom,
                    _ => AspectLabel::Class(class as u8),
                };
                let coord_class = gold.class_index(aspect);
                let coord_index = if variant == Variant::Bottom { index } else { k };
                let s = Self::sample_seed(seed, aspect, variant, coord_class, coord_index);
                samples.push(self.regenerate(aspect, variant, gold, index, s)?);
            }
        }
        Ok(DatasetManifest {
            aspect,
            variant,
            n_per_class,
            global_seed: seed,
            samples,
        })
    }

    /// Training set: random layouts plus the same number of target-absent
    /// samples.
    pub fn build_train(&self, aspect: Aspect, n_per_class: usize, seed: u64) -> Result<DatasetManifest> {
        let rand = self.build_variant(aspect, Variant::Rand, n_per_class, seed)?;
        let bottom = self.build_variant(aspect, Variant::Bottom, n_per_class, seed)?;
        let mut samples = rand.samples;
        samples.extend(bottom.samples);
        Ok(DatasetManifest {
            aspect,
            variant: Variant::Train,
            n_per_class,
            global_seed: seed,
            samples,
        })
    }

    /// `subsets` fixed-layout evaluation manifests with layout ids `0..subsets`.
    pub fn build_test(
        &self,
        aspect: Aspect,
        subsets: u32,
        n_per_class: usize,
        seed: u64,
    ) -> Result<Vec<DatasetManifest>> {
        if subsets == 0 {
            return Err(Error::InvalidArgument("at least one evaluation subset is required".into()));
        }
        (0..subsets)
            .map(|j| self.build_variant(aspect, Variant::Fix(j), n_per_class, seed))
            .collect()
    }
}

/// Checks every manifest invariant; returns a description of the first
/// violation.
pub fn check_manifest(m: &DatasetManifest) -> std::result::Result<(), String> {
    let counts = m.class_counts();
    let labels = m.aspect.num_labels();
    let labelled = &counts[..labels];
    let bottom = counts[labels];
    match m.variant {
        Variant::Rand | Variant::Fix(_) => {
            if labelled.iter().any(|&c| c != m.n_per_class) || bottom != 0 {
                return Err(format!("unbalanced classes {counts:?}"));
            }
        }
        Variant::Bottom => {
            if bottom != labels * m.n_per_class || labelled.iter().any(|&c| c != 0) {
                return Err(format!("bottom variant has counts {counts:?}"));
            }
        }
        Variant::Train => {
            if labelled.iter().any(|&c| c != m.n_per_class) || bottom != labels * m.n_per_class {
                return Err(format!("train counts {counts:?}"));
            }
        }
    }
    let question = question_for(m.aspect);
    for s in &m.samples {
        if derive_label(&s.graph, m.aspect) != s.gold {
            return Err(format!("sample {} gold disagrees with its graph", s.index));
        }
        if s.question != question {
            return Err(format!("sample {} has a foreign question", s.index));
        }
    }
    if let Variant::Fix(_) = m.variant {
        // node-count graphs may hold different numbers of A-labeled nodes, but
        // every slot still maps to one shared position
        let first = &m.samples[0].layout;
        if m.samples.iter().any(|s| s.layout != *first) {
            return Err("fixed-layout subset does not share one layout".into());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_slugs_round_trip() {
        for v in [Variant::Rand, Variant::Bottom, Variant::Fix(3), Variant::Train] {
            assert_eq!(v.slug().parse::<Variant>().unwrap(), v);
        }
        assert!("fixx".parse::<Variant>().is_err());
    }

    #[test]
    fn counts_per_variant() {
        let b = DatasetBuilder::default();
        let m = b.build_variant(Aspect::NodeColor, Variant::Rand, 3, 1).unwrap();
        assert_eq!(m.len(), 24);
        check_manifest(&m).unwrap();
        let m = b.build_variant(Aspect::EdgeStyle, Variant::Fix(0), 4, 1).unwrap();
        assert_eq!(m.len(), 8);
        check_manifest(&m).unwrap();
        let m = b.build_variant(Aspect::NodeColor, Variant::Bottom, 2, 1).unwrap();
        assert_eq!(m.len(), 16);
        assert!(m.samples.iter().all(|s| s.gold.is_bottom()));
        let m = b.build_train(Aspect::EdgeExistence, 5, 1).unwrap();
        assert_eq!(m.len(), 20);
        check_manifest(&m).unwrap();
        assert!(b.build_variant(Aspect::NodeColor, Variant::Rand, 0, 1).is_err());
    }

    #[test]
    fn train_seeds_are_disjoint() {
        let b = DatasetBuilder::default();
        let m = b.build_train(Aspect::NodeShape, 10, 9).unwrap();
        let mut seeds: Vec<u64> = m.samples.iter().map(|s| s.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), m.len());
    }

    #[test]
    fn test_subsets_have_distinct_layouts() {
        let b = DatasetBuilder::default();
        let subsets = b.build_test(Aspect::InDegree, 5, 2, 4).unwrap();
        assert_eq!(subsets.len(), 5);
        for (j, m) in subsets.iter().enumerate() {
            assert_eq!(m.variant, Variant::Fix(j as u32));
            check_manifest(m).unwrap();
        }
        for i in 0..5 {
            for j in i + 1..5 {
                assert_ne!(subsets[i].samples[0].layout, subsets[j].samples[0].layout);
            }
        }
    }

    #[test]
    fn sample_regenerates_from_its_seed() {
        let b = DatasetBuilder::default();
        let m = b.build_variant(Aspect::MultiHopPath, Variant::Rand, 3, 21).unwrap();
        let s = &m.samples[4];
        let again = b.regenerate(s.aspect, s.origin, s.gold, s.index, s.seed).unwrap();
        assert_eq!(&again, s);
    }
}
