// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use diagram_probe::activations::Stream;
use diagram_probe::dataset::{DEFAULT_N_PER_CLASS, DEFAULT_SUBSETS};
use diagram_probe::graph::Aspect;
use diagram_probe::intervention::ControlMode;
use diagram_probe::metrics::ThresholdTable;
use diagram_probe::mock::EncodingConfig;
use diagram_probe::probe::TrainSpec;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const OUT_ENV: &str = "DIAGRAM_PROBE_OUT";
pub const DEFAULT_OUT: &str = "diagram-probe-out";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub data: u64,
    pub model: u64,
    pub probe: u64,
    pub control: u64,
}

impl Seeds {
    pub fn all(seed: u64) -> Self {
        Self {
            data: seed,
            model: seed,
            probe: seed,
            control: seed,
        }
    }
}

/// Where hidden states come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    /// Encode with the mock model; the config's stream is replaced per run stream.
    Mock(EncodingConfig),
    /// Read `{dumps}/{aspect}/{stream}/{variant}.admp` written by an adapter.
    External { dumps: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionSettings {
    /// Layers to patch; every dump layer when absent.
    pub layers: Option<Vec<u32>>,
    pub control_mode: ControlMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub aspects: Vec<Aspect>,
    pub n_per_class: usize,
    /// Number of fixed-layout evaluation subsets.
    pub subsets: u32,
    pub seeds: Seeds,
    pub streams: Vec<Stream>,
    pub source: ModelSource,
    pub out: Option<PathBuf>,
    /// Replaces the chance threshold of every aspect.
    pub tau: Option<f64>,
    /// Also write PNG rasters next to the SVGs.
    pub raster: bool,
    pub train: TrainSpec,
    pub intervention: InterventionSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            aspects: Aspect::ALL.to_vec(),
            n_per_class: DEFAULT_N_PER_CLASS,
            subsets: DEFAULT_SUBSETS,
            seeds: Seeds::default(),
            streams: vec![Stream::VisionEncoder],
            source: ModelSource::Mock(EncodingConfig::default()),
            out: None,
            tau: None,
            raster: false,
            train: TrainSpec::default(),
            intervention: InterventionSettings::default(),
        }
    }
}

/// Command-line values that override the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub aspects: Option<Vec<Aspect>>,
    pub streams: Option<Vec<Stream>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(a) = o.aspects {
            self.aspects = a;
        }
        if let Some(s) = o.streams {
            self.streams = s;
        }
        if let Some(seed) = o.seed {
            self.seeds = Seeds::all(seed);
        }
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    /// Flag, then file, then environment, then the built-in default.
    pub fn out_root(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.aspects.is_empty() {
            return bad("no aspects selected".into());
        }
        if self.streams.is_empty() {
            return bad("no streams selected".into());
        }
        if self.n_per_class == 0 || self.subsets == 0 {
            return bad("n_per_class and subsets must be positive".into());
        }
        if let Some(tau) = self.tau {
            if !(0.0..1.0).contains(&tau) {
                return bad(format!("tau {tau} must lie in [0, 1)"));
            }
        }
        self.train.validate()?;
        match &self.source {
            ModelSource::Mock(cfg) => {
                for &stream in &self.streams {
                    self.encoding(cfg, stream).validate()?;
                }
            }
            ModelSource::External { dumps } => {
                if !dumps.is_dir() {
                    return bad(format!("dump directory {} does not exist", dumps.display()));
                }
            }
        }
        Ok(())
    }

    /// Mock encoding for one stream. Rules that need patch positions are
    /// dropped for the text stream.
    pub fn encoding(&self, cfg: &EncodingConfig, stream: Stream) -> EncodingConfig {
        let mut cfg = EncodingConfig { stream, ..cfg.clone() };
        if !stream.is_image() {
            cfg.rules.retain(|r| matches!(r.positions, diagram_probe::mock::PositionRule::Explicit(_)));
        }
        cfg
    }

    pub fn thresholds(&self) -> ThresholdTable {
        self.tau.map_or_else(ThresholdTable::standard, ThresholdTable::uniform)
    }
}
