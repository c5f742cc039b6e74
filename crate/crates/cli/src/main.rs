//! `tsgan`: data preparation, training, forecasting and evaluation from the shell.
//!
//! Every invocation writes `<command>.manifest.json` into the output directory;
//! `tsgan --replay <manifest>` re-runs it with the recorded configuration.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{manifest_name, now_ms, verify_inputs, Outputs, RunManifest};

#[derive(Debug, Clone, Parser)]
#[command(name = "tsgan", version, about = "Time-series GAN toolkit", arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Clone, Args)]
struct Global {
    /// Overrides the training seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// paper-gan, paper-wgan, paper-gru, paper-lstm, paper-timegan or desk.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// JSON document with optional `data`, `train` and `eval` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Re-run the command recorded in a manifest.
    #[arg(long, global = true)]
    replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gru,
    Lstm,
    Gan,
    Wgan,
    Timegan,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Gru => "GRU",
            ModelKind::Lstm => "LSTM",
            ModelKind::Gan => "GAN",
            ModelKind::Wgan => "WGAN",
            ModelKind::Timegan => "TimeGAN",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthArg {
    Jump,
    Sine,
    Ar1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CellArg {
    Gru,
    Lstm,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Direct,
    Iterative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BasisArg {
    Scaled,
    Original,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse an OHLCV CSV and repair its calendar.
    Ingest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Descriptive statistics, correlation clustering, monthly aggregates.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Second CSV whose features are tested against the first.
        #[arg(long)]
        against: Option<PathBuf>,
        #[arg(long, default_value_t = tsgan_core::stats::DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Derived columns, scaling and windowing.
    Features {
        #[arg(long)]
        input: PathBuf,
    },
    Train {
        #[arg(long, value_enum)]
        model: ModelKind,
        #[arg(long)]
        input: PathBuf,
    },
    /// Forecast the test windows with a trained model.
    Forecast {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Sample synthetic sequences from a trained generative model.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seq_len: Option<usize>,
    },
    /// Score a checkpoint over the evaluation horizons, or merge existing reports.
    Evaluate {
        #[arg(long, requires = "input", conflicts_with = "reports")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, num_args = 1.., required_unless_present = "checkpoint")]
        reports: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long, value_enum)]
        basis: Option<BasisArg>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Comparison table over metric reports.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
    },
    /// Layer-count by epoch-budget grid for a recurrent forecaster.
    Perturb {
        #[arg(long, value_enum)]
        model: CellArg,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        layers: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        epochs: Vec<usize>,
    },
    /// Seeded synthetic OHLCV fixture.
    SynthData {
        #[arg(long, value_enum)]
        kind: SynthArg,
        #[arg(long, default_value_t = 2000)]
        rows: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Stats { .. } => "stats",
            Command::Features { .. } => "features",
            Command::Train { .. } => "train",
            Command::Forecast { .. } => "forecast",
            Command::Generate { .. } => "generate",
            Command::Evaluate { .. } => "evaluate",
            Command::Compare { .. } => "compare",
            Command::Perturb { .. } => "perturb",
            Command::SynthData { .. } => "synth-data",
        }
    }
}

fn parse(argv: &[String]) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(std::iter::once("tsgan".to_string()).chain(argv.iter().cloned()))
}

fn run(argv: Vec<String>) -> Result<(), CliError> {
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            eprint!("{e}");
            return Err(CliError::Usage("invalid command line".into()));
        }
    };
    let out_dir = cli.global.out_dir.clone();

    let (argv, cli, config, preset) = if let Some(path) = &cli.global.replay {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read manifest {}: {e}", path.display())))?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))?;
        verify_inputs(&m)?;
        let recorded = parse(&m.argv).map_err(|e| CliError::Usage(format!("recorded command line: {e}")))?;
        (m.argv, recorded, m.config, m.preset)
    } else {
        let preset = cli.global.preset.as_deref().map(str::parse).transpose()?;
        let cfg = config::load(preset, cli.global.config.as_deref(), cli.global.seed)?;
        (argv, cli.clone(), cfg, cli.global.preset.clone())
    };
    let command = cli.command.ok_or_else(|| CliError::Usage("no subcommand given".into()))?;
    execute(command, argv, config, preset, out_dir)
}

fn execute(
    command: Command,
    argv: Vec<String>,
    config: RunConfig,
    preset: Option<String>,
    out_dir: PathBuf,
) -> Result<(), CliError> {
    let started = now_ms();
    let mut out = Outputs::new(&out_dir)?;
    let name = command.name();
    commands::dispatch(&command, &config, &mut out)?;
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: name.to_string(),
        argv,
        seed: config.train.seed,
        preset,
        config,
        inputs: std::mem::take(&mut out.inputs),
        outputs: std::mem::take(&mut out.written),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
    };
    std::fs::write(out_dir.join(manifest_name(name)), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tsgan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
