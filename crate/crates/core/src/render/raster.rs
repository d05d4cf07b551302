// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;

use resvg::{tiny_skia, usvg};

use super::RenderConfig;
use crate::error::{Error, Result};

/// Row-major 8-bit RGB pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Mean absolute per-channel difference.
    pub fn mean_abs_diff(&self, other: &RgbImage) -> Result<f64> {
        if self.data.len() != other.data.len() {
            return Err(Error::LengthMismatch {
                left: self.data.len(),
                right: other.data.len(),
            });
        }
        let total: u64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a.abs_diff(b) as u64)
            .sum();
        Ok(total as f64 / self.data.len().max(1) as f64)
    }
}

/// Rasterizes an SVG document at the configured canvas size over white.
pub fn rasterize(svg: &[u8], cfg: &RenderConfig) -> Result<RgbImage> {
    let tree = usvg::Tree::from_data(svg, &usvg::Options::default())
        .map_err(|e| Error::RasterFailure(e.to_string()))?;
    let mut pixmap = tiny_skia::Pixmap::new(cfg.width, cfg.height)
        .ok_or_else(|| Error::RasterFailure("zero-sized canvas".into()))?;
    pixmap.fill(tiny_skia::Color::WHITE);
    let size = tree.size();
    let transform = tiny_skia::Transform::from_scale(
        cfg.width as f32 / size.width(),
        cfg.height as f32 / size.height(),
    );
    resvg::render(&tree, transform, &mut pixmap.as_mut());
    let data = pixmap
        .pixels()
        .iter()
        .flat_map(|p| {
            let c = p.demultiply();
            [c.red(), c.green(), c.blue()]
        })
        .collect();
    Ok(RgbImage {
        width: cfg.width,
        height: cfg.height,
        data,
    })
}

/// Encodes an 8-bit RGB PNG without alpha.
pub fn write_png<W: Write>(image: &RgbImage, out: W) -> Result<()> {
    let mut encoder = png::Encoder::new(out, image.width, image.height);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::RasterFailure(e.to_string()))?;
    writer
        .write_image_data(&image.data)
        .map_err(|e| Error::RasterFailure(e.to_string()))?;
    writer.finish().map_err(|e| Error::RasterFailure(e.to_string()))
}
