// SPDX-License-Identifier: MIT OR Apache-2.0

use diagram_probe::dataset::{check_manifest, write_dataset, DatasetManifest};
use rayon::prelude::*;

use super::Context;
use crate::error::{CliError, CliResult};

/// Builds and writes the training set and every evaluation subset of each
/// configured aspect.
pub fn cmd_gen(ctx: &Context) -> CliResult<()> {
    let cfg = &ctx.cfg;
    let manifests: Vec<DatasetManifest> = cfg
        .aspects
        .par_iter()
        .map(|&aspect| {
            let mut all = vec![ctx.builder.build_train(aspect, cfg.n_per_class, cfg.seeds.data)?];
            all.extend(ctx.builder.build_test(aspect, cfg.subsets, cfg.n_per_class, cfg.seeds.data)?);
            Ok(all)
        })
        .collect::<diagram_probe::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for m in &manifests {
        check_manifest(m).map_err(|e| CliError::Data(format!("{} {}: {e}", m.aspect, m.variant.slug())))?;
    }
    let root = ctx.layout.data();
    let written: Vec<usize> = manifests
        .par_iter()
        .map(|m| {
            let n = write_dataset(m, &root, &ctx.builder.render, cfg.raster)?;
            eprintln!("gen {}/{}: {} samples, {n} files written", m.aspect, m.variant.slug(), m.len());
            Ok(n)
        })
        .collect::<diagram_probe::Result<_>>()?;
    println!(
        "gen: {} manifests, {} files written under {}",
        manifests.len(),
        written.iter().sum::<usize>(),
        root.display()
    );
    Ok(())
}
