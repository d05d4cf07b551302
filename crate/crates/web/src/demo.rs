// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;

use diagram_probe::activations::Stream;
use diagram_probe::dataset::{DatasetBuilder, DatasetManifest};
use diagram_probe::graph::{sample_graph, Aspect, Category};
use diagram_probe::intervention::{ControlMode, InterventionPlan};
use diagram_probe::metrics::{threshold, AccuracyGrid};
use diagram_probe::mock::{mock_encode, EncodingConfig, InjectionRule, LabelCode, PositionRule};
use diagram_probe::pipeline::{evaluate_grid, intervene_mock, train_job};
use diagram_probe::probe::TrainSpec;
use diagram_probe::render::{plan_layout, render_svg, LayoutMode};
use diagram_probe::activations::MemoryDump;
use serde::Serialize;
use serde_json::json;

const LAYERS: [u32; 3] = [0, 1, 2];
const N_TRAIN: usize = 3;
const N_TEST: usize = 2;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn parse_aspect(name: &str) -> Result<Aspect, String> {
    name.parse().map_err(err)
}

fn to_json<T: Serialize>(v: &T) -> Out {
    serde_json::to_string(v).map_err(err)
}

pub fn catalog() -> String {
    let aspects: Vec<_> = Aspect::ALL
        .iter()
        .map(|a| json!({"name": a.name(), "title": a.title(), "labels": a.labels()}))
        .collect();
    serde_json::Value::Array(aspects).to_string()
}

pub fn render_diagram(aspect: &str, label: &str, seed: u64, layout: i32) -> Out {
    let aspect = parse_aspect(aspect)?;
    let target = aspect.parse_label(label).map_err(err)?;
    let graph = sample_graph(aspect, target, seed).map_err(err)?;
    let mode = if layout < 0 { LayoutMode::Random } else { LayoutMode::Fixed(layout as u32) };
    let builder = DatasetBuilder::default();
    let plan = plan_layout(&graph, mode, seed, &builder.render).map_err(err)?;
    let svg = render_svg(&graph, &plan, &builder.render).map_err(err)?;
    to_json(&json!({
        "svg": String::from_utf8(svg).map_err(err)?,
        "question": diagram_probe::dataset::question_for(aspect),
        "label": label,
        "graph": serde_json::from_str::<serde_json::Value>(&graph.to_json()).map_err(err)?,
    }))
}

/// Node aspects live on the target node's patches; the rest are spread over
/// the background.
fn demo_config(aspect: Aspect, inject_layer: u32) -> Result<EncodingConfig, String> {
    if !LAYERS.contains(&inject_layer) {
        return Err(format!("inject_layer must be one of {LAYERS:?}"));
    }
    let positions = match aspect.category() {
        Category::Single => PositionRule::TargetNodePatches,
        _ => PositionRule::AllBackground,
    };
    Ok(EncodingConfig {
        d: 16,
        layers: LAYERS.to_vec(),
        noise_sigma: 0.4,
        rules: vec![InjectionRule::new(aspect, positions, LabelCode::LinearOneHot { scale: 4.0 }, 0.4).on_layers(vec![inject_layer])],
        ..EncodingConfig::default()
    })
}

struct Experiment {
    cfg: EncodingConfig,
    test: DatasetManifest,
    dump: MemoryDump,
    grid: AccuracyGrid,
}

fn run_probes(aspect: &str, seed: u64, inject_layer: u32, epochs: usize) -> Result<Experiment, String> {
    let aspect = parse_aspect(aspect)?;
    if epochs == 0 {
        return Err("epochs must be positive".into());
    }
    let cfg = demo_config(aspect, inject_layer)?;
    let builder = DatasetBuilder::default();
    let train = builder.build_train(aspect, N_TRAIN, seed).map_err(err)?;
    let test = builder.build_test(aspect, 1, N_TEST, seed).map_err(err)?.remove(0);
    let train_dump = mock_encode(&train, &cfg, seed).map_err(err)?;
    let dump = mock_encode(&test, &cfg, seed).map_err(err)?;
    let spec = TrainSpec {
        epochs,
        seed,
        ..TrainSpec::default()
    };
    let mut probes = BTreeMap::new();
    for layer in LAYERS {
        let (outcome, _) = train_job(&train_dump, &train, layer, None, &spec).map_err(err)?;
        probes.insert((layer, None), outcome.params);
    }
    let grid = evaluate_grid(&probes, &dump, &test, 0).map_err(err)?;
    Ok(Experiment { cfg, test, dump, grid })
}

pub fn probe_heatmap(aspect: &str, seed: u64, inject_layer: u32, epochs: usize) -> Out {
    let e = run_probes(aspect, seed, inject_layer, epochs)?;
    let (rows, cols) = e.grid.grid.ok_or("mock grid missing")?;
    let layers: Vec<_> = LAYERS
        .iter()
        .map(|&l| {
            let values = e.grid.row(l).map_err(err)?;
            let max = values.iter().cloned().fold(0.0, f64::max);
            Ok(json!({"layer": l, "values": values, "max": max}))
        })
        .collect::<Result<_, String>>()?;
    to_json(&json!({
        "rows": rows,
        "cols": cols,
        "tau": threshold(e.grid.aspect),
        "layers": layers,
    }))
}

pub fn intervention_demo(aspect: &str, seed: u64, inject_layer: u32, epochs: usize) -> Out {
    let e = run_probes(aspect, seed, inject_layer, epochs)?;
    let tau = threshold(e.grid.aspect);
    let grids = [e.grid];
    let (row, plans) = intervene_mock(&grids, &[e.dump], &[e.test], &e.cfg, &LAYERS, tau, ControlMode::Uniform, seed).map_err(err)?;
    let plan: &InterventionPlan = &plans[0];
    to_json(&json!({
        "stream": Stream::VisionEncoder.name(),
        "row": row,
        "layers": plan.layers,
        "positions": plan.positions,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn catalog_lists_every_aspect() {
        let c = parse(&catalog());
        assert_eq!(c.as_array().unwrap().len(), 11);
        assert_eq!(c[0]["name"], "node_color");
        assert_eq!(c[0]["labels"].as_array().unwrap().len(), 8);
    }

    #[test]
    fn renders_requested_label() {
        let out = parse(&render_diagram("edge_style", "dashed", 4, -1).unwrap());
        let svg = out["svg"].as_str().unwrap();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains("stroke-dasharray"));
        assert_eq!(out, parse(&render_diagram("edge_style", "dashed", 4, -1).unwrap()));
        assert_ne!(out["svg"], parse(&render_diagram("edge_style", "dashed", 4, 2).unwrap())["svg"]);
    }

    #[test]
    fn bad_inputs_are_errors() {
        assert!(render_diagram("node_colour", "red", 0, 0).is_err());
        assert!(render_diagram("node_color", "teal", 0, 0).is_err());
        assert!(probe_heatmap("node_color", 0, 7, 10).is_err());
        assert!(probe_heatmap("node_color", 0, 1, 0).is_err());
    }

    #[test]
    fn heatmap_peaks_on_the_injected_layer() {
        let out = parse(&probe_heatmap("node_color", 1, 1, 60).unwrap());
        assert_eq!(out["rows"], 16);
        let max = |l: usize| out["layers"][l]["max"].as_f64().unwrap();
        assert!(max(1) > 0.8, "{}", max(1));
        assert!(max(0) < 0.5 && max(2) < 0.5, "{} {}", max(0), max(2));
    }

    #[test]
    fn patching_found_positions_breaks_the_answer() {
        let out = parse(&intervention_demo("node_color", 1, 1, 60).unwrap());
        let row = &out["row"];
        assert!(row["clean"].as_f64().unwrap() >= 0.99);
        assert!(row["delta_patched"].as_f64().unwrap() >= 0.5);
        assert_eq!(row["delta_controlled"].as_f64().unwrap(), 0.0);
        let targets = out["layers"][1]["targets"].as_array().unwrap();
        assert_eq!(targets.len(), out["layers"][1]["controls"].as_array().unwrap().len());
    }
}
