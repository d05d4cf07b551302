// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic stand-in for a vision-language model.
//!
//! Hidden states are seeded Gaussian noise. Injection rules write a known
//! label code into reserved dimensions at chosen positions and layers, so
//! probes and interventions can be checked against exact ground truth.
//! [`mock_answer`] reads those dimensions back and plays the role of the
//! model's answer.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::activations::{Activations, DumpMeta, MemoryDump, Stream, ADMP_VERSION};
use crate::dataset::{AspectSample, DatasetManifest};
use crate::error::{Error, Result};
use crate::graph::{Aspect, AspectLabel, TARGET_ID};
use crate::render::{node_patch_cells, RenderConfig};
use crate::seed::{derive_seed, rng, tag};

/// Where a rule writes its code.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionRule {
    Explicit(Vec<usize>),
    /// Grid cells overlapping the bounding box of any node labeled A.
    TargetNodePatches,
    /// Grid cells overlapping no node.
    AllBackground,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCode {
    /// `scale * onehot(y)` in `|Y|` reserved dims.
    LinearOneHot { scale: f32 },
    /// `scale * [onehot(a), onehot((a + y) mod |Y|)]` in `2|Y|` dims, with `a`
    /// drawn per sample. For binary aspects this is a two-bit parity code.
    NonlinearXor { scale: f32 },
    None,
}

impl LabelCode {
    fn width(self, aspect: Aspect) -> usize {
        match self {
            LabelCode::LinearOneHot { .. } | LabelCode::None => aspect.num_labels(),
            LabelCode::NonlinearXor { .. } => 2 * aspect.num_labels(),
        }
    }

    fn scale(self) -> Option<f32> {
        match self {
            LabelCode::LinearOneHot { scale } | LabelCode::NonlinearXor { scale } => Some(scale),
            LabelCode::None => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectionRule {
    pub aspect: Aspect,
    pub positions: PositionRule,
    pub code: LabelCode,
    /// Noise on the reserved dims, at every position.
    pub noise_sigma: f32,
    /// Layers carrying the code; all configured layers when absent.
    #[serde(default)]
    pub layers: Option<Vec<u32>>,
    /// First reserved dim; packed after the previous rule when absent.
    #[serde(default)]
    pub dim_offset: Option<usize>,
}

impl InjectionRule {
    pub fn new(aspect: Aspect, positions: PositionRule, code: LabelCode, noise_sigma: f32) -> Self {
        Self {
            aspect,
            positions,
            code,
            noise_sigma,
            layers: None,
            dim_offset: None,
        }
    }

    pub fn on_layers(mut self, layers: Vec<u32>) -> Self {
        self.layers = Some(layers);
        self
    }

    fn active_on(&self, layer: u32) -> bool {
        self.layers.as_ref().is_none_or(|ls| ls.contains(&layer))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingConfig {
    pub model_id: String,
    pub stream: Stream,
    pub d: usize,
    pub grid: (usize, usize),
    pub layers: Vec<u32>,
    /// Noise on dims no rule reserves.
    pub noise_sigma: f32,
    pub rules: Vec<InjectionRule>,
    /// Canvas geometry used to resolve node patches.
    pub render: RenderConfig,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            model_id: "mock".into(),
            stream: Stream::VisionEncoder,
            d: 64,
            grid: (16, 16),
            layers: vec![0, 1, 2, 3],
            noise_sigma: 1.0,
            rules: Vec::new(),
            render: RenderConfig::default(),
        }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<()> {
        let conflict = |m: String| Err(Error::ConfigConflict(m));
        if self.d == 0 {
            return conflict("d must be positive".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return conflict(format!("noise_sigma {} must be non-negative", self.noise_sigma));
        }
        let mut ids = self.layers.clone();
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() || ids.len() != self.layers.len() {
            return conflict("layers must be non-empty and unique".into());
        }
        if self.stream.is_image() {
            self.render.validate()?;
            if self.render.grid() != self.grid {
                return conflict(format!(
                    "grid {:?} does not match the canvas patch grid {:?}",
                    self.grid,
                    self.render.grid()
                ));
            }
        }
        for r in &self.rules {
            if !(r.noise_sigma >= 0.0) {
                return conflict(format!("{} rule noise_sigma must be non-negative", r.aspect));
            }
            if let Some(ls) = &r.layers {
                if let Some(l) = ls.iter().find(|l| !self.layers.contains(l)) {
                    return conflict(format!("{} rule uses unknown layer {l}", r.aspect));
                }
            }
            match &r.positions {
                PositionRule::Explicit(ps) if self.stream.is_image() => {
                    let t = self.grid.0 * self.grid.1;
                    if let Some(p) = ps.iter().find(|&&p| p >= t) {
                        return conflict(format!("{} rule position {p} outside T = {t}", r.aspect));
                    }
                }
                PositionRule::Explicit(_) => {}
                _ if !self.stream.is_image() => {
                    return conflict(format!("{} rule needs an image stream for patch positions", r.aspect));
                }
                _ => {}
            }
        }
        self.reserved_dims().map(|_| ())
    }

    /// Reserved dim range of each rule, in rule order.
    pub fn reserved_dims(&self) -> Result<Vec<Range<usize>>> {
        let mut cursor = 0;
        let mut out: Vec<Range<usize>> = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let start = r.dim_offset.unwrap_or(cursor);
            let range = start..start + r.code.width(r.aspect);
            if range.end > self.d {
                return Err(Error::ConfigConflict(format!(
                    "{} rule needs dims {range:?} but d = {}",
                    r.aspect, self.d
                )));
            }
            if let Some(other) = out.iter().find(|o| o.start < range.end && range.start < o.end) {
                return Err(Error::ConfigConflict(format!(
                    "{} rule dims {range:?} overlap {other:?}",
                    r.aspect
                )));
            }
            cursor = range.end;
            out.push(range);
        }
        Ok(out)
    }

    fn rules_for(&self, aspect: Aspect) -> Result<Vec<(&InjectionRule, Range<usize>)>> {
        let dims = self.reserved_dims()?;
        Ok(self.rules.iter().zip(dims).filter(|(r, _)| r.aspect == aspect).collect())
    }
}

/// Cells covered by the nodes of `sample`, either only those labeled A or all.
fn node_cells(sample: &AspectSample, render: &RenderConfig, only_target: bool) -> Result<Vec<usize>> {
    let mut cells = Vec::new();
    for (slot, node) in sample.graph.nodes().iter().enumerate() {
        if !only_target || node.id == TARGET_ID {
            cells.extend(node_patch_cells(&sample.layout, slot, render)?);
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(cells)
}

/// Positions `rule` writes to for `sample`, sorted.
pub fn resolve_positions(rule: &InjectionRule, sample: &AspectSample, cfg: &EncodingConfig, t: usize) -> Result<Vec<usize>> {
    match &rule.positions {
        PositionRule::Explicit(ps) => {
            if let Some(&p) = ps.iter().find(|&&p| p >= t) {
                return Err(Error::IndexOutOfRange {
                    what: "position",
                    index: p as u64,
                    limit: t as u64,
                });
            }
            let mut ps = ps.clone();
            ps.sort_unstable();
            ps.dedup();
            Ok(ps)
        }
        PositionRule::TargetNodePatches => node_cells(sample, &cfg.render, true),
        PositionRule::AllBackground => {
            let occupied = node_cells(sample, &cfg.render, false)?;
            Ok((0..t).filter(|p| occupied.binary_search(p).is_err()).collect())
        }
    }
}

fn question_tokens(question: &str) -> Vec<String> {
    question.split_whitespace().map(str::to_owned).collect()
}

/// Metadata of the dump [`mock_encode`] produces for `manifest`.
pub fn mock_meta(manifest: &DatasetManifest, cfg: &EncodingConfig) -> Result<DumpMeta> {
    cfg.validate()?;
    let (positions, grid, token_strings) = if cfg.stream.is_image() {
        (cfg.grid.0 * cfg.grid.1, Some(cfg.grid), None)
    } else {
        let first = manifest
            .samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("text stream needs at least one sample".into()))?;
        let tokens = question_tokens(&first.question);
        if let Some(s) = manifest.samples.iter().find(|s| s.question != first.question) {
            return Err(Error::ShapeMismatch(format!("sample {} has a different question", s.index)));
        }
        (tokens.len(), None, Some(tokens))
    };
    Ok(DumpMeta {
        model_id: cfg.model_id.clone(),
        stream: cfg.stream,
        n_samples: manifest.len(),
        layer_ids: cfg.layers.clone(),
        positions,
        hidden: cfg.d,
        grid,
        token_strings,
        manifest_ref: manifest.path_in(Path::new("")).to_string_lossy().into_owned(),
        dump_version: ADMP_VERSION,
    })
}

fn xor_offset(sample: &AspectSample, k: usize) -> usize {
    (derive_seed(&[tag("mock_xor"), sample.seed]) % k as u64) as usize
}

/// Hidden states of one sample, one `[T x d]` block per configured layer.
pub fn encode_sample(sample: &AspectSample, cfg: &EncodingConfig, t: usize, seed: u64) -> Result<Vec<Vec<f32>>> {
    let d = cfg.d;
    let rules = cfg.rules_for(sample.aspect)?;
    let mut sigma = vec![cfg.noise_sigma; d];
    for (rule, dims) in &rules {
        sigma[dims.clone()].fill(rule.noise_sigma);
    }
    let mut resolved = Vec::with_capacity(rules.len());
    for (rule, _) in &rules {
        resolved.push(resolve_positions(rule, sample, cfg, t)?);
    }
    let k = sample.aspect.num_labels();
    let mut blocks = Vec::with_capacity(cfg.layers.len());
    for &layer in &cfg.layers {
        let mut noise = rng(derive_seed(&[tag("mock_noise"), seed, sample.seed, layer as u64]));
        let mut block = Vec::with_capacity(t * d);
        for _ in 0..t {
            for s in &sigma {
                let z: f32 = noise.sample(StandardNormal);
                block.push(z * s);
            }
        }
        if let AspectLabel::Class(y) = sample.gold {
            let y = y as usize;
            for ((rule, dims), positions) in rules.iter().zip(&resolved) {
                if !rule.active_on(layer) {
                    continue;
                }
                let writes: Vec<(usize, f32)> = match rule.code {
                    LabelCode::LinearOneHot { scale } => vec![(y, scale)],
                    LabelCode::NonlinearXor { scale } => {
                        let a = xor_offset(sample, k);
                        vec![(a, scale), (k + (a + y) % k, scale)]
                    }
                    LabelCode::None => Vec::new(),
                };
                for &p in positions {
                    for &(dim, v) in &writes {
                        block[p * d + dims.start + dim] += v;
                    }
                }
            }
        }
        blocks.push(block);
    }
    Ok(blocks)
}

/// Encodes every sample of `manifest`. Deterministic in
/// `(manifest, cfg, seed)`.
pub fn mock_encode(manifest: &DatasetManifest, cfg: &EncodingConfig, seed: u64) -> Result<MemoryDump> {
    let meta = mock_meta(manifest, cfg)?;
    let mut data = Vec::with_capacity(meta.block_count() * meta.block_len());
    for sample in &manifest.samples {
        for block in encode_sample(sample, cfg, meta.positions, seed)? {
            data.extend(block);
        }
    }
    MemoryDump::from_parts(meta, data)
}

/// Positions the mock "model" reads when answering, per aspect.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockAnswerPolicy {
    pub read_positions: BTreeMap<Aspect, Vec<usize>>,
}

impl MockAnswerPolicy {
    /// Reads exactly where the first coding rule of the sample's aspect
    /// injects for this sample.
    pub fn injected(sample: &AspectSample, cfg: &EncodingConfig, t: usize) -> Result<Self> {
        let mut read_positions = BTreeMap::new();
        if let Some((rule, _)) = cfg.rules_for(sample.aspect)?.into_iter().find(|(r, _)| r.code != LabelCode::None) {
            read_positions.insert(sample.aspect, resolve_positions(rule, sample, cfg, t)?);
        }
        Ok(Self { read_positions })
    }

    pub fn fixed(aspect: Aspect, positions: Vec<usize>) -> Self {
        Self {
            read_positions: BTreeMap::from([(aspect, positions)]),
        }
    }
}

/// Answer given when the code is not readable.
pub fn fallback_label(aspect: Aspect) -> &'static str {
    aspect.labels()[0]
}

/// Decodes the aspect's code, averaged over the policy's read positions and
/// the rule's layers present in `dump`. Returns [`fallback_label`] when the
/// decoded magnitude falls below half the code scale.
pub fn mock_answer<A: Activations + ?Sized>(
    dump: &A,
    sample_index: usize,
    aspect: Aspect,
    policy: &MockAnswerPolicy,
    cfg: &EncodingConfig,
) -> Result<String> {
    let fallback = || Ok(fallback_label(aspect).to_owned());
    let meta = dump.meta();
    let Some((rule, dims)) = cfg.rules_for(aspect)?.into_iter().find(|(r, _)| r.code != LabelCode::None) else {
        return fallback();
    };
    let Some(positions) = policy.read_positions.get(&aspect).filter(|p| !p.is_empty()) else {
        return fallback();
    };
    if let Some(&p) = positions.iter().find(|&&p| p >= meta.positions) {
        return Err(Error::IndexOutOfRange {
            what: "read position",
            index: p as u64,
            limit: meta.positions as u64,
        });
    }
    let layers: Vec<u32> = meta.layer_ids.iter().copied().filter(|&l| rule.active_on(l)).collect();
    if layers.is_empty() {
        return fallback();
    }
    let width = dims.len();
    let mut mean = vec![0.0f64; width];
    for &l in &layers {
        let block = dump.block(sample_index, l)?;
        for &p in positions {
            let row = &block[p * meta.hidden + dims.start..p * meta.hidden + dims.end];
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v as f64;
            }
        }
    }
    let n = (layers.len() * positions.len()) as f64;
    mean.iter_mut().for_each(|m| *m /= n);

    let argmax = |xs: &[f64]| {
        xs.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
    };
    let k = aspect.num_labels();
    let (label, magnitude) = match rule.code {
        LabelCode::LinearOneHot { .. } => argmax(&mean),
        LabelCode::NonlinearXor { .. } => {
            let (a, ma) = argmax(&mean[..k]);
            let (b, mb) = argmax(&mean[k..]);
            ((b + k - a) % k, ma.min(mb))
        }
        LabelCode::None => unreachable!("filtered above"),
    };
    let scale = rule.code.scale().unwrap_or(0.0) as f64;
    if magnitude < scale / 2.0 {
        return fallback();
    }
    Ok(aspect.labels()[label].to_owned())
}

/// Answers for every sample, each read at that sample's injected positions.
pub fn answer_manifest<A: Activations + ?Sized>(
    dump: &A,
    manifest: &DatasetManifest,
    cfg: &EncodingConfig,
) -> Result<Vec<String>> {
    if dump.meta().n_samples != manifest.len() {
        return Err(Error::LengthMismatch {
            left: dump.meta().n_samples,
            right: manifest.len(),
        });
    }
    manifest
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let policy = MockAnswerPolicy::injected(s, cfg, dump.meta().positions)?;
            mock_answer(dump, i, manifest.aspect, &policy, cfg)
        })
        .collect()
}
