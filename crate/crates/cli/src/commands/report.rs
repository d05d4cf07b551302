// SPDX-License-Identifier: MIT OR Apache-2.0

use diagram_probe::activations::Stream;
use diagram_probe::graph::Aspect;
use diagram_probe::metrics::{emit_reports, max_acc, AccuracyGrid};

use super::Context;
use crate::error::{CliError, CliResult};

/// Grid files of one aspect and stream, in subset order. Empty when none
/// were written.
pub(crate) fn load_grids(ctx: &Context, aspect: Aspect, stream: Stream) -> CliResult<Vec<AccuracyGrid>> {
    let mut grids = Vec::new();
    for j in 0..ctx.cfg.subsets {
        let path = ctx.layout.grid(aspect, stream, j);
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let grid: AccuracyGrid = serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        grid.validate()?;
        grids.push(grid);
    }
    Ok(grids)
}

pub fn cmd_report(ctx: &Context) -> CliResult<()> {
    let mut all = Vec::new();
    for &aspect in &ctx.cfg.aspects {
        for &stream in &ctx.cfg.streams {
            let grids = load_grids(ctx, aspect, stream)?;
            if let Some(first) = grids.first() {
                let best = first
                    .layers
                    .iter()
                    .map(|&l| max_acc(&grids, l).map(|v| (l, v)))
                    .collect::<diagram_probe::Result<Vec<_>>>()?
                    .into_iter()
                    .fold((0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
                println!("{aspect}/{}: MaxAcc {:.4} at layer {}", stream.name(), best.1, best.0);
            }
            all.extend(grids);
        }
    }
    if all.is_empty() {
        return Err(CliError::Data("no accuracy grids found; run probe first".into()));
    }
    let files = emit_reports(&all, &ctx.cfg.thresholds(), &ctx.layout.reports())?;
    println!("report: {} files under {}", files.len(), ctx.layout.reports().display());
    Ok(())
}
