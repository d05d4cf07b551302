// SPDX-License-Identifier: MIT OR Apache-2.0

//! `diagram-probe`: generate diagram datasets, train probe sweeps, emit
//! reports and run mean-replacement interventions.

mod commands;
mod config;
mod error;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diagram_probe::activations::Stream;
use diagram_probe::graph::Aspect;

use crate::commands::Context;
use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "diagram-probe", version, about = "Probe where diagram information lives in model hidden states")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Aspects to run, comma separated (e.g. node_color,edge_count).
    #[arg(long, global = true, value_delimiter = ',')]
    aspect: Option<Vec<Aspect>>,

    /// Streams to run, comma separated (vision_encoder, language_model_image, language_model_text).
    #[arg(long, global = true, value_delimiter = ',')]
    stream: Option<Vec<Stream>>,

    /// Sets every seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output root. Falls back to the config, then $DIAGRAM_PROBE_OUT.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Build and write the datasets.
    Gen,
    /// Encode or check dumps, train probes and score the evaluation subsets.
    Probe,
    /// Write heatmap, MaxAcc and summary files from the grids.
    Report,
    /// Plan and run patched and controlled interventions.
    Intervene,
    /// gen, probe, report and intervene in order.
    All,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.apply(Overrides {
        aspects: cli.aspect,
        streams: cli.stream,
        seed: cli.seed,
        out: cli.out,
    });
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let ctx = Context::new(cfg)?;
    match cli.command {
        Command::Gen => commands::cmd_gen(&ctx),
        Command::Probe => commands::cmd_probe(&ctx),
        Command::Report => commands::cmd_report(&ctx),
        Command::Intervene => commands::cmd_intervene(&ctx),
        Command::All => commands::cmd_all(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("diagram-probe: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
