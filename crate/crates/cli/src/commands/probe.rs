// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;

use diagram_probe::activations::{Activations, DumpReader, DumpWriter, Stream};
use diagram_probe::dataset::DatasetManifest;
use diagram_probe::fsutil::write_if_changed;
use diagram_probe::graph::Aspect;
use diagram_probe::mock::{encode_sample, mock_meta, EncodingConfig};
use diagram_probe::pipeline::{evaluate_grid, probe_jobs, train_job};
use diagram_probe::probe::{read_probe, write_probe, ProbeCheckpoint, ProbeKey, ProbeRegistry, TrainSpec};
use diagram_probe::seed::{derive_seed, tag};
use rayon::prelude::*;

use super::Context;
use crate::config::ModelSource;
use crate::error::{CliError, CliResult};

/// Ensures dumps exist, trains every missing probe, then scores each
/// evaluation subset into a grid file.
pub fn cmd_probe(ctx: &Context) -> CliResult<()> {
    let mut registry = ProbeRegistry::load(&ctx.layout.registry())?;
    for &aspect in &ctx.cfg.aspects {
        let train = ctx.manifest(aspect, diagram_probe::dataset::Variant::Train)?;
        let tests = ctx.test_manifests(aspect)?;
        for &stream in &ctx.cfg.streams {
            if let ModelSource::Mock(enc) = &ctx.cfg.source {
                let enc = ctx.cfg.encoding(enc, stream);
                for m in std::iter::once(&train).chain(&tests) {
                    ensure_mock_dump(ctx, &enc, stream, m)?;
                }
            }
            train_stream(ctx, &mut registry, aspect, stream, &train)?;
            registry.save(&ctx.layout.registry())?;
            evaluate_stream(ctx, &registry, aspect, stream, &tests)?;
        }
    }
    Ok(())
}

/// Writes the mock dump unless a file with identical metadata is present.
fn ensure_mock_dump(ctx: &Context, enc: &EncodingConfig, stream: Stream, m: &DatasetManifest) -> CliResult<()> {
    let path = ctx.layout.dump(m.aspect, stream, m.variant);
    let meta = mock_meta(m, enc)?;
    if path.is_file() {
        if let Ok(r) = DumpReader::open(&path) {
            if r.meta() == &meta {
                return Ok(());
            }
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("admp.tmp");
    let mut w = DumpWriter::new(BufWriter::new(File::create(&tmp)?), meta.clone())?;
    for s in &m.samples {
        for block in encode_sample(s, enc, meta.positions, ctx.cfg.seeds.model)? {
            w.push_block(&block)?;
        }
    }
    w.finish()?;
    fs::rename(&tmp, &path)?;
    eprintln!("dump {}", path.display());
    Ok(())
}

fn job_seed(base: u64, key: &ProbeKey) -> u64 {
    derive_seed(&[
        base,
        key.aspect.index() as u64,
        tag(key.stream.name()),
        key.layer as u64,
        key.position.map_or(u64::MAX, |t| t as u64),
    ])
}

fn train_stream(ctx: &Context, registry: &mut ProbeRegistry, aspect: Aspect, stream: Stream, train: &DatasetManifest) -> CliResult<()> {
    let reader = ctx.open_dump(aspect, stream, train)?;
    let jobs: Vec<ProbeKey> = probe_jobs(&reader)
        .into_iter()
        .map(|(layer, position)| ProbeKey {
            aspect,
            stream,
            layer,
            position,
        })
        .filter(|k| registry.get(k).is_none() || !ctx.layout.probe(k).is_file())
        .collect();
    drop(reader);
    let done: Vec<ProbeCheckpoint> = jobs
        .par_iter()
        .map(|key| {
            // each worker reads its own layer from its own handle
            let reader = ctx.open_dump(aspect, stream, train)?;
            let base = TrainSpec {
                seed: job_seed(ctx.cfg.seeds.probe, key),
                ..ctx.cfg.train.clone()
            };
            let (outcome, spec) = train_job(&reader, train, key.layer, key.position, &base)?;
            let ckpt = ProbeCheckpoint {
                key: *key,
                params: outcome.params,
                spec,
                best_val_accuracy: outcome.best_val_accuracy,
            };
            write_probe(&ctx.layout.probe(key), &ckpt)?;
            eprintln!(
                "probe {} val {:.4} (batch {}, lr {:.3e})",
                key.file_name(),
                ckpt.best_val_accuracy,
                ckpt.spec.batch_size,
                ckpt.spec.learning_rate
            );
            Ok(ckpt)
        })
        .collect::<CliResult<_>>()?;
    println!("probe {aspect}/{}: trained {} probes", stream.name(), done.len());
    for ckpt in &done {
        registry.insert(ckpt);
    }
    Ok(())
}

fn evaluate_stream(ctx: &Context, registry: &ProbeRegistry, aspect: Aspect, stream: Stream, tests: &[DatasetManifest]) -> CliResult<()> {
    let mut probes = BTreeMap::new();
    for e in registry.entries.iter().filter(|e| e.key.aspect == aspect && e.key.stream == stream) {
        let ckpt = read_probe(&ctx.layout.probes().join(&e.file))?;
        probes.insert((e.key.layer, e.key.position), ckpt.params);
    }
    if probes.is_empty() {
        return Err(CliError::Data(format!("no probes trained for {aspect}/{}", stream.name())));
    }
    tests
        .par_iter()
        .enumerate()
        .map(|(j, m)| {
            let reader = ctx.open_dump(aspect, stream, m)?;
            let grid = evaluate_grid(&probes, &reader, m, j as u32)?;
            let mut json = serde_json::to_string_pretty(&grid).map_err(|e| CliError::Data(e.to_string()))?;
            json.push('\n');
            if write_if_changed(&ctx.layout.grid(aspect, stream, j as u32), json.as_bytes())? {
                eprintln!("grid {aspect}/{}/fix{j}", stream.name());
            }
            Ok(())
        })
        .collect()
}
