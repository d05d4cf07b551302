// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::PI;
use std::fmt::Write;

use super::glyphs;
use super::{LayoutPlan, RenderConfig};
use crate::error::Result;
use crate::graph::{Color, DiagramGraph, EdgeStyle, Shape};

fn hex(c: Color) -> String {
    let [r, g, b] = c.rgb();
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn polygon_points(cx: f64, cy: f64, radius: f64, sides: usize) -> String {
    // squares sit axis-aligned, odd polygons point up
    let start = if sides == 4 { -0.75 * PI } else { -0.5 * PI };
    (0..sides)
        .map(|k| {
            let a = start + 2.0 * PI * k as f64 / sides as f64;
            format!("{:.2},{:.2}", cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders `graph` as an SVG 1.1 document.
///
/// Paint order is edges, then node shapes, then identifier glyphs, so labels
/// are never covered. Output is byte-identical for identical inputs.
pub fn render_svg(graph: &DiagramGraph, layout: &LayoutPlan, cfg: &RenderConfig) -> Result<Vec<u8>> {
    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let centers: Vec<(f64, f64)> = (0..graph.nodes().len())
        .map(|slot| layout.position(slot).map(|(x, y)| (x * w, y * h)))
        .collect::<Result<_>>()?;

    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        cfg.width, cfg.height, cfg.width, cfg.height
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>", cfg.width, cfg.height);

    let r = cfg.node_radius_px;
    for e in graph.edges() {
        let (sx, sy) = centers[e.src];
        let (tx, ty) = centers[e.dst];
        let len = ((tx - sx).powi(2) + (ty - sy).powi(2)).sqrt();
        if len <= 2.0 * r {
            continue;
        }
        let (ux, uy) = ((tx - sx) / len, (ty - sy) / len);
        let gap = r + cfg.stroke_width_px;
        let (x0, y0) = (sx + ux * gap, sy + uy * gap);
        let (tipx, tipy) = (tx - ux * gap, ty - uy * gap);
        let (bx, by) = (tipx - ux * cfg.arrow_length_px, tipy - uy * cfg.arrow_length_px);
        let (px, py) = (-uy * cfg.arrow_width_px / 2.0, ux * cfg.arrow_width_px / 2.0);
        let color = hex(e.color);
        let dash = match e.style {
            EdgeStyle::Dashed => format!(" stroke-dasharray=\"{:.1},{:.1}\"", cfg.dash_px.0, cfg.dash_px.1),
            EdgeStyle::Solid => String::new(),
        };
        let _ = writeln!(
            s,
            "<path class=\"edge\" d=\"M{x0:.2} {y0:.2} L{bx:.2} {by:.2}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{:.1}\"{dash}/>",
            cfg.edge_width_px
        );
        let _ = writeln!(
            s,
            "<polygon class=\"arrow\" points=\"{tipx:.2},{tipy:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{color}\"/>",
            bx + px,
            by + py,
            bx - px,
            by - py
        );
    }

    for (node, &(cx, cy)) in graph.nodes().iter().zip(&centers) {
        let fill = hex(node.color);
        let stroke = format!("fill=\"{fill}\" stroke=\"#000000\" stroke-width=\"{:.1}\"", cfg.stroke_width_px);
        match node.shape {
            Shape::Circle => {
                let _ = writeln!(s, "<circle class=\"node\" cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"{r:.2}\" {stroke}/>");
            }
            shape => {
                let pts = polygon_points(cx, cy, r, shape.sides().unwrap_or(4));
                let _ = writeln!(s, "<polygon class=\"node\" points=\"{pts}\" {stroke}/>");
            }
        }
    }

    for (node, &(cx, cy)) in graph.nodes().iter().zip(&centers) {
        let ink = if node.color.is_light() { "#000000" } else { "#ffffff" };
        let _ = writeln!(
            s,
            "<path class=\"label\" data-id=\"{}\" d=\"{}\" fill=\"none\" stroke=\"{ink}\" stroke-width=\"3.0\" stroke-linecap=\"round\" stroke-linejoin=\"round\"/>",
            node.id,
            glyphs::path_data(node.id, cx, cy, cfg.font_size_px)
        );
    }
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}
