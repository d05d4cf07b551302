// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON report emission.
//!
//! ```text
//! {out}/{aspect}/{stream}/heatmap_layer{l}.csv   subset-mean accuracy per patch
//! {out}/{aspect}/{stream}/maxacc.csv             MaxAcc by relative layer position
//! {out}/thresholds.json
//! {out}/summary.json
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{max_acc, mean_row, AccuracyGrid, ThresholdTable};
use crate::activations::Stream;
use crate::error::{Error, Result};
use crate::fsutil::write_if_changed;
use crate::graph::{Aspect, Category};

fn round_sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// `x` rounded to six significant digits, printed without trailing zeros.
pub fn format_sig6(x: f64) -> String {
    round_sig6(x).to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub aspect: Aspect,
    pub category: Category,
    pub stream: Stream,
    /// Highest MaxAcc over layers, in [0, 1].
    pub max_acc: f64,
    pub best_layer: u32,
    pub relative_layer: f64,
    pub threshold: f64,
    /// `100 * threshold`, on the percentage scale of the summary table.
    pub chance_percent: f64,
}

#[derive(Serialize)]
struct ThresholdRow {
    aspect: Aspect,
    threshold: f64,
    chance_percent: f64,
}

#[derive(Serialize)]
struct Summary {
    rows: Vec<SummaryRow>,
    chance_level: Vec<ThresholdRow>,
}

fn relative(index: usize, count: usize) -> f64 {
    if count <= 1 {
        0.0
    } else {
        index as f64 / (count - 1) as f64
    }
}

fn heatmap_csv(values: &[f64], grid: Option<(usize, usize)>) -> String {
    let cols = grid.map_or(values.len(), |(_, c)| c);
    let mut out = String::new();
    for row in values.chunks(cols) {
        let cells: Vec<String> = row.iter().map(|&v| format_sig6(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Writes heatmaps, MaxAcc series, thresholds and the summary table. Grids
/// are grouped by `(aspect, stream)`; each group holds the evaluation
/// subsets. Returns every emitted path; unchanged files are not rewritten.
pub fn emit_reports(grids: &[AccuracyGrid], thresholds: &ThresholdTable, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if grids.is_empty() {
        return Err(Error::NoData("no accuracy grids to report".into()));
    }
    let mut groups: BTreeMap<(Aspect, Stream), Vec<AccuracyGrid>> = BTreeMap::new();
    for g in grids {
        g.validate()?;
        groups.entry((g.aspect, g.stream)).or_default().push(g.clone());
    }
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, bytes: &[u8]| -> Result<()> {
        write_if_changed(&path, bytes)?;
        written.push(path);
        Ok(())
    };

    let mut rows = Vec::new();
    for ((aspect, stream), group) in &groups {
        let dir = out_dir.join(aspect.name()).join(stream.name());
        let first = &group[0];
        let mut series = String::from("layer,relative_position,max_acc\n");
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (i, &layer) in first.layers.iter().enumerate() {
            let row = mean_row(group, layer)?;
            emit(dir.join(format!("heatmap_layer{layer}.csv")), heatmap_csv(&row, first.grid).as_bytes())?;
            let m = max_acc(group, layer)?;
            writeln!(
                series,
                "{layer},{},{}",
                format_sig6(relative(i, first.layers.len())),
                format_sig6(m)
            )
            .expect("writing to a String");
            if m > best.0 {
                best = (m, layer, i);
            }
        }
        emit(dir.join("maxacc.csv"), series.as_bytes())?;
        let tau = thresholds.get(*aspect);
        rows.push(SummaryRow {
            aspect: *aspect,
            category: aspect.category(),
            stream: *stream,
            max_acc: round_sig6(best.0),
            best_layer: best.1,
            relative_layer: round_sig6(relative(best.2, first.layers.len())),
            threshold: round_sig6(tau),
            chance_percent: round_sig6(100.0 * tau),
        });
    }

    let row_order = |r: &SummaryRow| (r.aspect.index(), r.stream);
    rows.sort_by_key(row_order);
    let chance_level: Vec<ThresholdRow> = Aspect::ALL
        .into_iter()
        .map(|a| ThresholdRow {
            aspect: a,
            threshold: round_sig6(thresholds.get(a)),
            chance_percent: round_sig6(100.0 * thresholds.get(a)),
        })
        .collect();
    emit(out_dir.join("thresholds.json"), &to_json(&chance_level)?)?;
    emit(out_dir.join("summary.json"), &to_json(&Summary { rows, chance_level })?)?;
    Ok(written)
}
