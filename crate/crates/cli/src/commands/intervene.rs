// SPDX-License-Identifier: MIT OR Apache-2.0

use diagram_probe::activations::{Activations, Stream};
use diagram_probe::fsutil::write_if_changed;
use diagram_probe::intervention::{build_patched_dump, InterventionMode, InterventionPlan};
use diagram_probe::metrics::format_sig6;
use diagram_probe::pipeline::{intervene_mock, InterventionRow};
use serde::Serialize;

use super::report::load_grids;
use super::Context;
use crate::config::ModelSource;
use crate::error::{CliError, CliResult};

fn to_json<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Data(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Plans targets from the vision-encoder grids, writes patched and
/// controlled dumps, and with the mock source scores all three runs.
pub fn cmd_intervene(ctx: &Context) -> CliResult<()> {
    let stream = Stream::VisionEncoder;
    let mut rows = Vec::new();
    for &aspect in &ctx.cfg.aspects {
        let grids = load_grids(ctx, aspect, stream)?;
        if grids.len() != ctx.cfg.subsets as usize {
            return Err(CliError::Data(format!("{aspect}: {} of {} grids present; run probe first", grids.len(), ctx.cfg.subsets)));
        }
        let tests = ctx.test_manifests(aspect)?;
        let dumps = tests
            .iter()
            .map(|m| ctx.open_dump(aspect, stream, m))
            .collect::<CliResult<Vec<_>>>()?;
        let layers = ctx.cfg.intervention.layers.clone().unwrap_or_else(|| dumps[0].meta().layer_ids.clone());
        let tau = ctx.cfg.thresholds().get(aspect);
        let mode = ctx.cfg.intervention.control_mode;
        let seed = ctx.cfg.seeds.control;
        let plans = match &ctx.cfg.source {
            ModelSource::Mock(enc) => {
                let enc = ctx.cfg.encoding(enc, stream);
                let (row, plans) = intervene_mock(&grids, &dumps, &tests, &enc, &layers, tau, mode, seed)?;
                println!("{}", describe(&row));
                rows.push(row);
                plans
            }
            ModelSource::External { .. } => grids
                .iter()
                .map(|g| InterventionPlan::build(g, &layers, tau, seed, mode))
                .collect::<diagram_probe::Result<Vec<_>>>()?,
        };
        let dir = ctx.layout.intervention(aspect);
        for (plan, dump) in plans.iter().zip(&dumps) {
            let j = plan.subset;
            write_if_changed(&dir.join(format!("plan_fix{j}.json")), &to_json(plan)?)?;
            if let Some(layer) = plan.full_layer() {
                eprintln!("intervene {aspect} fix{j}: layer {layer} has an empty complement, no dumps written");
                continue;
            }
            for (mode, name) in [(InterventionMode::Patched, "patched"), (InterventionMode::Controlled, "controlled")] {
                let run = build_patched_dump(dump, plan, mode)?;
                write_if_changed(&dir.join(format!("{name}_fix{j}.admp")), &run.dump.to_bytes())?;
            }
        }
        if matches!(ctx.cfg.source, ModelSource::External { .. }) {
            println!("intervene {aspect}: plans and patched dumps under {}", dir.display());
        }
    }
    if !rows.is_empty() {
        let reports = ctx.layout.reports();
        write_if_changed(&reports.join("intervention.json"), &to_json(&rows)?)?;
        write_if_changed(&reports.join("intervention.csv"), rows_csv(&rows).as_bytes())?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

fn rows_csv(rows: &[InterventionRow]) -> String {
    let mut out = String::from("aspect,clean,patched,controlled,chance,delta_patched,delta_controlled,patched_ratio,excluded\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.aspect,
            format_sig6(r.clean),
            opt(r.patched),
            opt(r.controlled),
            format_sig6(r.chance),
            opt(r.delta_patched),
            opt(r.delta_controlled),
            opt(r.patched_ratio),
            r.excluded.as_deref().map(|e| format!("\"{}\"", e.replace('"', "'"))).unwrap_or_default()
        ));
    }
    out
}

fn describe(r: &InterventionRow) -> String {
    let pct = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{:.1}", 100.0 * v));
    match &r.excluded {
        Some(why) => format!("{}: clean {} excluded ({why})", r.aspect, pct(Some(r.clean))),
        None => format!(
            "{}: clean {} patched {} controlled {} chance {} ratio {}",
            r.aspect,
            pct(Some(r.clean)),
            pct(r.patched),
            pct(r.controlled),
            pct(Some(r.chance)),
            pct(r.patched_ratio)
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use diagram_probe::graph::Aspect;

    #[test]
    fn csv_leaves_missing_cells_empty() {
        let row = InterventionRow {
            aspect: Aspect::EdgeCount,
            clean: 0.5,
            patched: None,
            controlled: None,
            chance: 0.2,
            delta_patched: None,
            delta_controlled: None,
            patched_ratio: None,
            excluded: Some("EmptyComplement: subset 0 layer 1".into()),
        };
        let csv = rows_csv(&[row]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line, "edge_count,0.5,,,0.2,,,,\"EmptyComplement: subset 0 layer 1\"");
    }
}
