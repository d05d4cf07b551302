// SPDX-License-Identifier: MIT OR Apache-2.0

//! Output tree of a run.

use std::path::{Path, PathBuf};

use diagram_probe::activations::Stream;
use diagram_probe::dataset::Variant;
use diagram_probe::graph::Aspect;
use diagram_probe::probe::ProbeKey;

pub struct Layout {
    pub root: PathBuf,
    /// Root of the dump tree; differs from `root/dumps` for external sources.
    pub dumps: PathBuf,
}

impl Layout {
    pub fn data(&self) -> PathBuf {
        self.root.join("data")
    }

    pub fn dump(&self, aspect: Aspect, stream: Stream, variant: Variant) -> PathBuf {
        stream_dir(&self.dumps, aspect, stream).join(format!("{}.admp", variant.slug()))
    }

    pub fn probes(&self) -> PathBuf {
        self.root.join("probes")
    }

    pub fn registry(&self) -> PathBuf {
        self.probes().join("registry.json")
    }

    pub fn probe(&self, key: &ProbeKey) -> PathBuf {
        self.probes().join(key.file_name())
    }

    pub fn grid(&self, aspect: Aspect, stream: Stream, subset: u32) -> PathBuf {
        stream_dir(&self.root.join("grids"), aspect, stream).join(format!("fix{subset}.json"))
    }

    pub fn reports(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn intervention(&self, aspect: Aspect) -> PathBuf {
        self.root.join("intervention").join(aspect.name())
    }
}

fn stream_dir(base: &Path, aspect: Aspect, stream: Stream) -> PathBuf {
    base.join(aspect.name()).join(stream.name())
}
