// SPDX-License-Identifier: MIT OR Apache-2.0

//! Browser bindings. Every export takes plain scalars and returns a JSON
//! string; the `demo` module holds the same functions for native tests.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Aspects with their labels, for populating the page controls.
#[wasm_bindgen]
pub fn catalog() -> String {
    demo::catalog()
}

/// Samples a diagram with the requested label and renders it. `layout` is a
/// fixed layout id, or negative for a random layout.
#[wasm_bindgen]
pub fn render_diagram(aspect: &str, label: &str, seed: u32, layout: i32) -> Result<String, JsValue> {
    js(demo::render_diagram(aspect, label, seed as u64, layout))
}

/// Trains one probe per mock layer and returns per-patch accuracy on a
/// fixed-layout subset.
#[wasm_bindgen]
pub fn probe_heatmap(aspect: &str, seed: u32, inject_layer: u32, epochs: u32) -> Result<String, JsValue> {
    js(demo::probe_heatmap(aspect, seed as u64, inject_layer, epochs as usize))
}

/// Patches the positions the probes found and an equal-sized random control
/// set, and reports the mock model's accuracy for each run.
#[wasm_bindgen]
pub fn intervention_demo(aspect: &str, seed: u32, inject_layer: u32, epochs: u32) -> Result<String, JsValue> {
    js(demo::intervention_demo(aspect, seed as u64, inject_layer, epochs as usize))
}
