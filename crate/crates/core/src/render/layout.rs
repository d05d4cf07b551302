// SPDX-License-Identifier: MIT OR Apache-2.0

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RenderConfig;
use crate::error::{Error, Result};
use crate::graph::DiagramGraph;
use crate::seed::{derive_seed, rng, tag};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutMode {
    Random,
    Fixed(u32),
}

/// Node-center positions in normalized `[0, 1]^2` canvas coordinates, one per
/// node slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutPlan {
    pub mode: LayoutMode,
    pub positions: Vec<(f64, f64)>,
}

impl LayoutPlan {
    pub fn position(&self, slot: usize) -> Result<(f64, f64)> {
        self.positions.get(slot).copied().ok_or(Error::MissingPosition(slot))
    }

    pub fn min_pairwise_distance(&self) -> f64 {
        let p = &self.positions;
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min(((p[i].0 - p[j].0).powi(2) + (p[i].1 - p[j].1).powi(2)).sqrt());
            }
        }
        best
    }
}

fn scatter(seed: u64, slots: usize, cfg: &RenderConfig) -> Result<Vec<(f64, f64)>> {
    let margin_x = (cfg.node_radius_px + cfg.stroke_width_px) / cfg.width as f64;
    let margin_y = (cfg.node_radius_px + cfg.stroke_width_px) / cfg.height as f64;
    let mut rng = rng(seed);
    let mut attempts = 0;
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(slots);
    while placed.len() < slots {
        if attempts >= cfg.layout_attempts {
            return Err(Error::LayoutExhausted {
                attempts,
                min_separation: cfg.min_separation,
            });
        }
        attempts += 1;
        let p = (
            rng.random_range(margin_x..=1.0 - margin_x),
            rng.random_range(margin_y..=1.0 - margin_y),
        );
        if placed
            .iter()
            .all(|q| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() >= cfg.min_separation)
        {
            placed.push(p);
        }
    }
    Ok(placed)
}

/// Shared positions of fixed layout `layout_id`; a pure function of the id.
pub fn fixed_layout_table(layout_id: u32, slots: usize, cfg: &RenderConfig) -> Result<Vec<(f64, f64)>> {
    scatter(derive_seed(&[tag("fixed_layout"), layout_id as u64]), slots, cfg)
}

/// Places every node of `graph`. `seed` is ignored in fixed mode.
pub fn plan_layout(graph: &DiagramGraph, mode: LayoutMode, seed: u64, cfg: &RenderConfig) -> Result<LayoutPlan> {
    let slots = graph.nodes().len();
    let positions = match mode {
        LayoutMode::Random => scatter(derive_seed(&[tag("random_layout"), seed]), slots, cfg)?,
        LayoutMode::Fixed(id) => fixed_layout_table(id, slots, cfg)?,
    };
    Ok(LayoutPlan { mode, positions })
}

/// Row-major patch indices whose cells intersect the bounding box of the node
/// in `slot`.
pub fn node_patch_cells(layout: &LayoutPlan, slot: usize, cfg: &RenderConfig) -> Result<Vec<usize>> {
    let (x, y) = layout.position(slot)?;
    let (rows, cols) = cfg.grid();
    let r = cfg.node_radius_px;
    let p = cfg.patch_px as f64;
    let (cx, cy) = (x * cfg.width as f64, y * cfg.height as f64);
    let span = |lo: f64, hi: f64, n: usize| {
        let first = (lo / p).floor().max(0.0) as usize;
        let last = ((hi / p).ceil() as usize).min(n);
        first..last
    };
    let mut cells = Vec::new();
    for row in span(cy - r, cy + r, rows) {
        for col in span(cx - r, cx + r, cols) {
            cells.push(row * cols + col);
        }
    }
    Ok(cells)
}
