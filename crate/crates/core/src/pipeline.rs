// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment steps shared by the command-line tool, the browser demo and the
//! tests: per-layer probe training, grid evaluation and scored intervention
//! runs against the mock model. Everything here is sequential; callers fan
//! out over jobs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activations::Activations;
use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use crate::graph::Aspect;
use crate::intervention::{aggregate_patched_ratio, build_patched_dump, ControlMode, InterventionMode, InterventionPlan};
use crate::metrics::{eval_layer, eval_probe, mean, vqa_accuracy, AccuracyGrid};
use crate::mock::{answer_manifest, EncodingConfig};
use crate::probe::{build_instances, search_and_train, ProbeParams, Regime, TrainOutcome, TrainSpec};

/// Trains the probe of one `(layer, position)` job. `position` is `None` for
/// image-token streams and selects the token for the text stream.
pub fn train_job<A: Activations + ?Sized>(
    dump: &A,
    manifest: &DatasetManifest,
    layer: u32,
    position: Option<usize>,
    base: &TrainSpec,
) -> Result<(TrainOutcome, TrainSpec)> {
    let regime = if dump.meta().stream.is_image() {
        Regime::ImagePart
    } else {
        Regime::TextPart
    };
    let instances = build_instances(dump, manifest, regime, layer, position)?;
    search_and_train(&instances, regime, base)
}

/// All `(layer, position)` jobs a stream needs.
pub fn probe_jobs<A: Activations + ?Sized>(dump: &A) -> Vec<(u32, Option<usize>)> {
    let meta = dump.meta();
    if meta.stream.is_image() {
        meta.layer_ids.iter().map(|&l| (l, None)).collect()
    } else {
        meta.layer_ids
            .iter()
            .flat_map(|&l| (0..meta.positions).map(move |t| (l, Some(t))))
            .collect()
    }
}

/// Scores trained probes on one evaluation subset. Probes keyed with
/// `position = None` are evaluated at every position of their layer.
pub fn evaluate_grid<A: Activations + ?Sized>(
    probes: &BTreeMap<(u32, Option<usize>), ProbeParams>,
    dump: &A,
    manifest: &DatasetManifest,
    subset: u32,
) -> Result<AccuracyGrid> {
    let meta = dump.meta();
    let mut layers: Vec<u32> = probes.keys().map(|&(l, _)| l).collect();
    layers.dedup();
    if layers.is_empty() {
        return Err(Error::NoData("no probes to evaluate".into()));
    }
    let mut grid = AccuracyGrid::new(manifest.aspect, meta.stream, subset, layers.clone(), meta.positions, meta.grid);
    grid.n_eval = manifest.len();
    for &layer in &layers {
        let row = match probes.get(&(layer, None)) {
            Some(p) => eval_layer(p, dump, manifest, layer)?,
            None => (0..meta.positions)
                .map(|t| {
                    let p = probes.get(&(layer, Some(t))).ok_or_else(|| {
                        Error::ShapeMismatch(format!("no probe for layer {layer} position {t}"))
                    })?;
                    eval_probe(p, dump, manifest, layer, t)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        grid.set_row(layer, &row)?;
    }
    Ok(grid)
}

/// One row of the clean / patched / controlled comparison. Accuracies are
/// subset means in [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionRow {
    pub aspect: Aspect,
    pub clean: f64,
    pub patched: Option<f64>,
    pub controlled: Option<f64>,
    pub chance: f64,
    pub delta_patched: Option<f64>,
    pub delta_controlled: Option<f64>,
    pub patched_ratio: Option<f64>,
    /// Why the intervention could not run, e.g. an empty complement.
    pub excluded: Option<String>,
}

/// Plans and scores interventions on every evaluation subset, answering with
/// the mock model. `grids[j]`, `dumps[j]` and `manifests[j]` describe subset
/// `j`.
#[allow(clippy::too_many_arguments)]
pub fn intervene_mock<A: Activations>(
    grids: &[AccuracyGrid],
    dumps: &[A],
    manifests: &[DatasetManifest],
    cfg: &EncodingConfig,
    layer_ids: &[u32],
    tau: f64,
    control_mode: ControlMode,
    seed: u64,
) -> Result<(InterventionRow, Vec<InterventionPlan>)> {
    if grids.len() != dumps.len() || grids.len() != manifests.len() {
        return Err(Error::LengthMismatch {
            left: grids.len(),
            right: dumps.len().min(manifests.len()),
        });
    }
    let first = manifests.first().ok_or_else(|| Error::NoData("no evaluation subsets".into()))?;
    let aspect = first.aspect;
    let mut plans = Vec::with_capacity(grids.len());
    let (mut clean, mut patched, mut controlled) = (Vec::new(), Vec::new(), Vec::new());
    let mut excluded = None;
    for ((grid, dump), manifest) in grids.iter().zip(dumps).zip(manifests) {
        let plan = InterventionPlan::build(grid, layer_ids, tau, seed, control_mode)?;
        clean.push(vqa_accuracy(&answer_manifest(dump, manifest, cfg)?, manifest)?);
        if let Some(layer) = plan.full_layer() {
            excluded.get_or_insert(format!(
                "EmptyComplement: subset {} layer {layer} has every position above threshold",
                grid.subset
            ));
        } else if excluded.is_none() {
            for (mode, out) in [(InterventionMode::Patched, &mut patched), (InterventionMode::Controlled, &mut controlled)] {
                let run = build_patched_dump(dump, &plan, mode)?;
                out.push(vqa_accuracy(&answer_manifest(&run.dump, manifest, cfg)?, manifest)?);
            }
        }
        plans.push(plan);
    }
    let clean = mean(&clean)?;
    let row = if excluded.is_some() {
        InterventionRow {
            aspect,
            clean,
            patched: None,
            controlled: None,
            chance: 1.0 / aspect.num_labels() as f64,
            delta_patched: None,
            delta_controlled: None,
            patched_ratio: None,
            excluded,
        }
    } else {
        let (p, c) = (mean(&patched)?, mean(&controlled)?);
        InterventionRow {
            aspect,
            clean,
            patched: Some(p),
            controlled: Some(c),
            chance: 1.0 / aspect.num_labels() as f64,
            delta_patched: Some(clean - p),
            delta_controlled: Some(clean - c),
            patched_ratio: Some(aggregate_patched_ratio(&plans)),
            excluded: None,
        }
    };
    Ok((row, plans))
}
