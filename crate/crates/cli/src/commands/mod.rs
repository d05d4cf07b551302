// SPDX-License-Identifier: MIT OR Apache-2.0

mod gen;
mod intervene;
mod probe;
mod report;

use std::path::Path;

use diagram_probe::activations::{Activations, DumpReader, Stream};
use diagram_probe::dataset::{read_manifest, DatasetBuilder, DatasetManifest, Variant, MANIFEST_FILE};
use diagram_probe::graph::Aspect;

pub use gen::cmd_gen;
pub use intervene::cmd_intervene;
pub use probe::cmd_probe;
pub use report::cmd_report;

use crate::config::{ExperimentConfig, ModelSource};
use crate::error::{CliError, CliResult};
use crate::layout::Layout;

/// Validated configuration plus the paths and builder derived from it.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub layout: Layout,
    pub builder: DatasetBuilder,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> CliResult<Self> {
        cfg.validate()?;
        let root = cfg.out_root();
        let (dumps, builder) = match &cfg.source {
            ModelSource::Mock(enc) => (root.join("dumps"), DatasetBuilder::new(enc.render.clone())),
            ModelSource::External { dumps } => (dumps.clone(), DatasetBuilder::default()),
        };
        Ok(Self {
            cfg,
            layout: Layout { root, dumps },
            builder,
        })
    }

    /// Reads a manifest written by `gen` and checks it matches the config.
    pub fn manifest(&self, aspect: Aspect, variant: Variant) -> CliResult<DatasetManifest> {
        let path = self.layout.data().join(aspect.name()).join(variant.slug()).join(MANIFEST_FILE);
        if !path.is_file() {
            return Err(CliError::Data(format!("missing manifest {}; run gen first", path.display())));
        }
        let m = read_manifest(&path, &self.builder)?;
        if m.n_per_class != self.cfg.n_per_class || m.global_seed != self.cfg.seeds.data {
            return Err(CliError::Data(format!(
                "{} was generated with n_per_class {} and seed {}, config asks for {} and {}",
                path.display(),
                m.n_per_class,
                m.global_seed,
                self.cfg.n_per_class,
                self.cfg.seeds.data
            )));
        }
        Ok(m)
    }

    pub fn test_manifests(&self, aspect: Aspect) -> CliResult<Vec<DatasetManifest>> {
        (0..self.cfg.subsets).map(|j| self.manifest(aspect, Variant::Fix(j))).collect()
    }

    /// Opens a dump and checks it describes `manifest`.
    pub fn open_dump(&self, aspect: Aspect, stream: Stream, manifest: &DatasetManifest) -> CliResult<DumpReader<std::io::BufReader<std::fs::File>>> {
        let path = self.layout.dump(aspect, stream, manifest.variant);
        open_checked(&path, stream, manifest)
    }
}

fn open_checked(path: &Path, stream: Stream, manifest: &DatasetManifest) -> CliResult<DumpReader<std::io::BufReader<std::fs::File>>> {
    if !path.is_file() {
        return Err(CliError::Data(format!("missing dump {}", path.display())));
    }
    let r = DumpReader::open(path)?;
    let meta = r.meta();
    if meta.stream != stream || meta.n_samples != manifest.len() {
        return Err(CliError::Data(format!(
            "{} holds {} samples of {}, expected {} of {}",
            path.display(),
            meta.n_samples,
            meta.stream.name(),
            manifest.len(),
            stream.name()
        )));
    }
    Ok(r)
}

/// Runs every stage in order.
pub fn cmd_all(ctx: &Context) -> CliResult<()> {
    cmd_gen(ctx)?;
    cmd_probe(ctx)?;
    cmd_report(ctx)?;
    if ctx.cfg.streams.contains(&Stream::VisionEncoder) {
        cmd_intervene(ctx)?;
    }
    Ok(())
}
