// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deterministic diagram rendering: layout planning, SVG output and
//! rasterization to RGB buffers / PNG files.

mod glyphs;
mod layout;
mod raster;
mod svg;

pub use layout::{fixed_layout_table, node_patch_cells, plan_layout, LayoutMode, LayoutPlan};
pub use raster::{rasterize, write_png, RgbImage};
pub use svg::render_svg;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canvas and glyph geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub node_radius_px: f64,
    pub stroke_width_px: f64,
    pub edge_width_px: f64,
    /// Height of identifier glyphs.
    pub font_size_px: f64,
    pub arrow_length_px: f64,
    pub arrow_width_px: f64,
    pub dash_px: (f64, f64),
    /// Side of one model patch; the canvas must tile exactly.
    pub patch_px: u32,
    /// Minimum distance between node centers in normalized units.
    pub min_separation: f64,
    pub layout_attempts: u32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 448,
            height: 448,
            node_radius_px: 36.0,
            stroke_width_px: 2.5,
            edge_width_px: 3.0,
            font_size_px: 26.0,
            arrow_length_px: 14.0,
            arrow_width_px: 12.0,
            dash_px: (8.0, 6.0),
            patch_px: 28,
            min_separation: 0.22,
            layout_attempts: 10_000,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.patch_px == 0 {
            return Err(Error::ConfigConflict("canvas and patch sizes must be positive".into()));
        }
        if self.width % self.patch_px != 0 || self.height % self.patch_px != 0 {
            return Err(Error::ConfigConflict(format!(
                "canvas {}x{} is not divisible by patch size {}",
                self.width, self.height, self.patch_px
            )));
        }
        Ok(())
    }

    /// Patch grid as `(rows, cols)`.
    pub fn grid(&self) -> (usize, usize) {
        ((self.height / self.patch_px) as usize, (self.width / self.patch_px) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_16_by_16() {
        let cfg = RenderConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.grid(), (16, 16));
        let bad = RenderConfig {
            width: 450,
            ..RenderConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
