// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean-replacement interventions on image-token hidden states.
//!
//! Targets `S` are the positions whose probe accuracy exceeds the threshold.
//! Each sample's targeted rows are replaced by `mu`, the mean of that sample's
//! rows outside `S`. A control run replaces an equally sized random set `R`
//! with the same `mu`.

use serde::{Deserialize, Serialize};

use crate::activations::{Activations, MemoryDump};
use crate::error::{Error, Result};
use crate::graph::Aspect;
use crate::metrics::AccuracyGrid;
use crate::seed::{derive_seed, rng, tag};

/// Positions at `layer` with accuracy strictly above `tau`, ascending.
pub fn select_targets(grid: &AccuracyGrid, layer: u32, tau: f64) -> Result<Vec<usize>> {
    Ok(grid
        .row(layer)?
        .iter()
        .enumerate()
        .filter(|(_, &acc)| acc > tau)
        .map(|(t, _)| t)
        .collect())
}

fn check_block(h: &[f32], d: usize, targets: &[usize]) -> Result<usize> {
    if d == 0 || h.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: h.len(),
        });
    }
    let t = h.len() / d;
    if let Some(&p) = targets.iter().find(|&&p| p >= t) {
        return Err(Error::IndexOutOfRange {
            what: "target position",
            index: p as u64,
            limit: t as u64,
        });
    }
    Ok(t)
}

/// Mean of the rows of the `[T x d]` block `h` that are not in `targets`,
/// accumulated in f64.
pub fn mean_complement(h: &[f32], d: usize, targets: &[usize]) -> Result<Vec<f32>> {
    let t = check_block(h, d, targets)?;
    let mut in_s = vec![false; t];
    targets.iter().for_each(|&p| in_s[p] = true);
    let n = in_s.iter().filter(|&&x| !x).count();
    if n == 0 {
        return Err(Error::EmptyComplement { positions: t });
    }
    let mut acc = vec![0.0f64; d];
    for (row, _) in h.chunks_exact(d).zip(&in_s).filter(|(_, &x)| !x) {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    Ok(acc.into_iter().map(|a| (a / n as f64) as f32).collect())
}

/// Overwrites the rows in `targets` with `mu`.
pub fn apply_patch_in_place(h: &mut [f32], targets: &[usize], mu: &[f32]) -> Result<()> {
    let d = mu.len();
    check_block(h, d, targets)?;
    for &p in targets {
        h[p * d..(p + 1) * d].copy_from_slice(mu);
    }
    Ok(())
}

pub fn apply_patch(h: &[f32], targets: &[usize], mu: &[f32]) -> Result<Vec<f32>> {
    let mut out = h.to_vec();
    apply_patch_in_place(&mut out, targets, mu)?;
    Ok(out)
}

/// How control positions are drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Uniformly from all positions; may overlap the targets.
    #[default]
    Uniform,
    /// Only from positions outside the targets.
    Disjoint,
}

/// `|targets|` positions drawn without replacement, ascending.
pub fn sample_control(targets: &[usize], t: usize, seed: u64) -> Vec<usize> {
    sample_control_with(targets, t, seed, ControlMode::Uniform).expect("uniform control always fits")
}

pub fn sample_control_with(targets: &[usize], t: usize, seed: u64, mode: ControlMode) -> Result<Vec<usize>> {
    let k = targets.len();
    if k > t {
        return Err(Error::InvalidArgument(format!("{k} targets exceed {t} positions")));
    }
    let pool: Vec<usize> = match mode {
        ControlMode::Uniform => (0..t).collect(),
        ControlMode::Disjoint => (0..t).filter(|p| !targets.contains(p)).collect(),
    };
    if k > pool.len() {
        return Err(Error::InvalidArgument(format!(
            "{k} disjoint control positions requested, {} available",
            pool.len()
        )));
    }
    let mut r = rng(derive_seed(&[tag("control"), seed]));
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut r, pool.len(), k)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub layer: u32,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
    /// `|targets| / T`.
    pub patched_ratio: f64,
}

/// Targets and controls for every intervened layer of one evaluation subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionPlan {
    pub aspect: Aspect,
    pub subset: u32,
    pub tau: f64,
    pub positions: usize,
    pub control_mode: ControlMode,
    pub layers: Vec<LayerPlan>,
}

impl InterventionPlan {
    /// Selects targets at each of `layer_ids` from the subset's grid and
    /// draws a seeded control set per layer.
    pub fn build(grid: &AccuracyGrid, layer_ids: &[u32], tau: f64, seed: u64, control_mode: ControlMode) -> Result<Self> {
        if layer_ids.is_empty() {
            return Err(Error::InvalidArgument("intervention needs at least one layer".into()));
        }
        let t = grid.positions;
        let layers = layer_ids
            .iter()
            .map(|&layer| {
                let targets = select_targets(grid, layer, tau)?;
                let control_seed = derive_seed(&[seed, grid.subset as u64, layer as u64]);
                let controls = sample_control_with(&targets, t, control_seed, control_mode)?;
                Ok(LayerPlan {
                    layer,
                    patched_ratio: targets.len() as f64 / t as f64,
                    targets,
                    controls,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            aspect: grid.aspect,
            subset: grid.subset,
            tau,
            positions: t,
            control_mode,
            layers,
        })
    }

    /// Mean patched ratio over layers.
    pub fn patched_ratio(&self) -> f64 {
        self.layers.iter().map(|l| l.patched_ratio).sum::<f64>() / self.layers.len() as f64
    }

    /// First layer whose targets leave no complement.
    pub fn full_layer(&self) -> Option<u32> {
        self.layers.iter().find(|l| l.targets.len() == self.positions).map(|l| l.layer)
    }

    pub fn is_empty(&self) -> bool {
        self.layers.iter().all(|l| l.targets.is_empty())
    }
}

/// Mean over plans (subsets) of each plan's mean over layers.
pub fn aggregate_patched_ratio(plans: &[InterventionPlan]) -> f64 {
    plans.iter().map(InterventionPlan::patched_ratio).sum::<f64>() / plans.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionMode {
    /// Replace the targets.
    Patched,
    /// Replace the control positions.
    Controlled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replacement {
    pub sample: usize,
    pub layer: u32,
    pub mu: Vec<f32>,
    pub positions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchedDump {
    pub mode: InterventionMode,
    pub replacements: Vec<Replacement>,
    /// The base dump with every replacement applied.
    pub dump: MemoryDump,
}

/// Applies `plan` to every sample of `dump`. In both modes `mu` is the mean
/// over the complement of the targets.
pub fn build_patched_dump<A: Activations + ?Sized>(dump: &A, plan: &InterventionPlan, mode: InterventionMode) -> Result<PatchedDump> {
    let meta = dump.meta().clone();
    if plan.positions != meta.positions {
        return Err(Error::ShapeMismatch(format!(
            "plan covers {} positions, dump has {}",
            plan.positions, meta.positions
        )));
    }
    for l in &plan.layers {
        meta.layer_index(l.layer)?;
    }
    let mut data = Vec::with_capacity(meta.block_count() * meta.block_len());
    let mut replacements = Vec::with_capacity(meta.n_samples * plan.layers.len());
    for sample in 0..meta.n_samples {
        for &layer in &meta.layer_ids {
            let mut block = dump.block(sample, layer)?.into_owned();
            if let Some(lp) = plan.layers.iter().find(|l| l.layer == layer) {
                let mu = mean_complement(&block, meta.hidden, &lp.targets)?;
                let positions = match mode {
                    InterventionMode::Patched => lp.targets.clone(),
                    InterventionMode::Controlled => lp.controls.clone(),
                };
                apply_patch_in_place(&mut block, &positions, &mu)?;
                replacements.push(Replacement {
                    sample,
                    layer,
                    mu,
                    positions,
                });
            }
            data.extend(block);
        }
    }
    Ok(PatchedDump {
        mode,
        replacements,
        dump: MemoryDump::from_parts(meta, data)?,
    })
}
