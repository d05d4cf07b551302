// SPDX-License-Identifier: MIT OR Apache-2.0

//! Renders one diagram to `<out>.svg` and `<out>.png`.
//!
//! `cargo run -p diagram-probe --example render_one -- node_color red 7 /tmp/diagram`

use std::fs::File;

use diagram_probe::graph::{sample_graph, Aspect};
use diagram_probe::render::{plan_layout, rasterize, render_svg, write_png, LayoutMode, RenderConfig};

fn main() -> diagram_probe::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let aspect: Aspect = args.get(1).map_or("node_color", |s| s.as_str()).parse()?;
    let target = aspect.parse_label(args.get(2).map_or(aspect.labels()[0], |s| s.as_str()))?;
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = args.get(4).cloned().unwrap_or_else(|| "diagram".into());

    let cfg = RenderConfig::default();
    let graph = sample_graph(aspect, target, seed)?;
    let layout = plan_layout(&graph, LayoutMode::Random, seed, &cfg)?;
    let svg = render_svg(&graph, &layout, &cfg)?;
    std::fs::write(format!("{out}.svg"), &svg)?;
    write_png(&rasterize(&svg, &cfg)?, File::create(format!("{out}.png"))?)?;
    println!("{}", graph.to_json());
    Ok(())
}
