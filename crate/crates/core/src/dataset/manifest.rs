// SPDX-License-Identifier: MIT OR Apache-2.0

//! Line-delimited manifest files: one JSON header line, then one JSON record
//! per sample. Images and graph files live beside the manifest under
//! `{aspect}/{variant}/`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AspectSample, DatasetBuilder, DatasetManifest, Variant};
use crate::error::{Error, Result};
use crate::fsutil::write_if_changed;
use crate::graph::{Aspect, AspectLabel};
use crate::render::{rasterize, render_svg, write_png, LayoutMode, RenderConfig};

pub const MANIFEST_FORMAT: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: u32,
    pub aspect: Aspect,
    pub variant: Variant,
    pub global_seed: u64,
    pub n_per_class: usize,
    pub count: usize,
    pub labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    index: usize,
    aspect: Aspect,
    /// `null` for the target-absent class.
    gold: Option<String>,
    question: String,
    seed: u64,
    layout_mode: LayoutMode,
    origin: Variant,
    image_ref: String,
    graph_ref: String,
}

impl DatasetManifest {
    pub fn header(&self) -> ManifestHeader {
        ManifestHeader {
            format: MANIFEST_FORMAT,
            aspect: self.aspect,
            variant: self.variant,
            global_seed: self.global_seed,
            n_per_class: self.n_per_class,
            count: self.samples.len(),
            labels: self.aspect.labels().iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Manifest file contents.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header()).expect("header serializes");
        out.push('\n');
        for s in &self.samples {
            let record = SampleRecord {
                index: s.index,
                aspect: s.aspect,
                gold: match s.gold {
                    AspectLabel::Bottom => None,
                    g => Some(g.text(s.aspect).to_string()),
                },
                question: s.question.clone(),
                seed: s.seed,
                layout_mode: s.layout_mode,
                origin: s.origin,
                image_ref: s.image_ref(),
                graph_ref: s.graph_ref(),
            };
            out.push_str(&serde_json::to_string(&record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Path of this manifest below a dataset root.
    pub fn path_in(&self, root: &Path) -> PathBuf {
        root.join(self.aspect.name()).join(self.variant.slug()).join(MANIFEST_FILE)
    }
}

/// Files belonging to one sample.
pub struct RenderedSample {
    pub svg: Vec<u8>,
    pub png: Option<Vec<u8>>,
    pub graph_json: String,
}

pub fn render_sample(sample: &AspectSample, cfg: &RenderConfig, raster: bool) -> Result<RenderedSample> {
    let svg = render_svg(&sample.graph, &sample.layout, cfg)?;
    let png = if raster {
        let mut buf = Vec::new();
        write_png(&rasterize(&svg, cfg)?, &mut buf)?;
        Some(buf)
    } else {
        None
    };
    Ok(RenderedSample {
        svg,
        png,
        graph_json: sample.graph.to_json(),
    })
}

/// Writes the manifest and every sample's files below `root`. Unchanged files
/// are left untouched; returns the number of files written.
pub fn write_dataset(manifest: &DatasetManifest, root: &Path, cfg: &RenderConfig, raster: bool) -> Result<usize> {
    let mut written = 0;
    for s in &manifest.samples {
        let files = render_sample(s, cfg, raster)?;
        written += usize::from(write_if_changed(&root.join(s.image_ref()), &files.svg)?);
        written += usize::from(write_if_changed(&root.join(s.graph_ref()), files.graph_json.as_bytes())?);
        if let Some(png) = files.png {
            written += usize::from(write_if_changed(&root.join(s.raster_ref()), &png)?);
        }
    }
    written += usize::from(write_if_changed(&manifest.path_in(root), manifest.to_jsonl().as_bytes())?);
    Ok(written)
}

/// Parses a manifest file and regenerates every sample from its seed.
pub fn read_manifest(path: &Path, builder: &DatasetBuilder) -> Result<DatasetManifest> {
    parse_manifest(&fs::read_to_string(path)?, builder)
}

pub(crate) fn parse_manifest(text: &str, builder: &DatasetBuilder) -> Result<DatasetManifest> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: ManifestHeader = serde_json::from_str(
        lines.next().ok_or_else(|| Error::Corrupt("empty manifest".into()))?,
    )?;
    if header.format != MANIFEST_FORMAT {
        return Err(Error::VersionUnsupported(header.format));
    }
    let mut samples = Vec::with_capacity(header.count);
    for line in lines {
        let r: SampleRecord = serde_json::from_str(line)?;
        if r.aspect != header.aspect {
            return Err(Error::Corrupt(format!("record {} has aspect {}", r.index, r.aspect)));
        }
        let gold = match &r.gold {
            None => AspectLabel::Bottom,
            Some(text) => header.aspect.parse_label(text)?,
        };
        let sample = builder.regenerate(header.aspect, r.origin, gold, r.index, r.seed)?;
        if sample.question != r.question || sample.layout_mode != r.layout_mode {
            return Err(Error::Corrupt(format!("record {} does not match its regeneration", r.index)));
        }
        samples.push(sample);
    }
    if samples.len() != header.count {
        return Err(Error::Corrupt(format!(
            "header declares {} samples, found {}",
            header.count,
            samples.len()
        )));
    }
    Ok(DatasetManifest {
        aspect: header.aspect,
        variant: header.variant,
        n_per_class: header.n_per_class,
        global_seed: header.global_seed,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trips() {
        let b = DatasetBuilder::default();
        let m = b.build_train(Aspect::EdgeColor, 2, 5).unwrap();
        let text = m.to_jsonl();
        assert_eq!(text.lines().count(), 1 + m.len());
        assert!(text.lines().nth(1).unwrap().contains("\"image_ref\":\"edge_color/rand/edge_color_rand_0.svg\""));
        assert!(text.lines().last().unwrap().contains("\"gold\":null"));
        assert_eq!(parse_manifest(&text, &b).unwrap(), m);
    }

    #[test]
    fn count_mismatch_is_corrupt() {
        let b = DatasetBuilder::default();
        let m = b.build_variant(Aspect::EdgeStyle, Variant::Rand, 1, 5).unwrap();
        let text = m.to_jsonl();
        let truncated: String = text.lines().take(2).map(|l| format!("{l}\n")).collect();
        assert!(matches!(parse_manifest(&truncated, &b), Err(Error::Corrupt(_))));
    }
}
