//! `dnpu`: device generation, control-voltage sweeps, gate statistics and
//! ensemble analysis from the command line.
//!
//! Exit codes: 0 success, 1 configuration error, 2 physics/solver failure,
//! 3 validation failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dnpu_core::sampling::{Gate, Preset};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "dnpu", version, about = "Hopping-transport simulator for dopant network devices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random device and write `device.json`.
    Generate(RunArgs),
    /// Sample control voltages and measure current vectors.
    Sample(SampleArgs),
    /// Abundance curves per gate from a dataset.
    Abundance(AbundanceArgs),
    /// Covariance, PCA and nonlinearity indicators of a dataset.
    Analyze(AnalyzeArgs),
    /// Local hypervolume of a gate and the implied gate count.
    Hypervolume(HypervolumeArgs),
    /// Compare KMC currents with exact master-equation currents on tiny chains.
    OracleCheck(OracleArgs),
}

/// Flags shared by commands that build or load a device.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Existing device file instead of generating one.
    #[arg(long)]
    pub device: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of control-voltage samples.
    #[arg(long)]
    pub samples: Option<u64>,
    /// KMC measurement steps per input combination.
    #[arg(long)]
    pub steps: Option<u64>,
    /// Sampling ranges preset.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Hopping distance override, nm.
    #[arg(long)]
    pub a_nm: Option<f64>,
    /// Temperature override, K.
    #[arg(long)]
    pub t_kelvin: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for sampling (1 runs sequentially).
    #[arg(long)]
    pub threads: Option<usize>,
}

impl RunArgs {
    /// The config file with the flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        if let Some(p) = &self.device {
            c.device_file = Some(p.clone());
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.samples {
            c.samples = n;
        }
        if let Some(s) = self.steps {
            c.kmc.measurement_steps = s;
        }
        if let Some(p) = self.preset {
            c.preset = p;
            c.ranges = None;
        }
        c.a_nm = self.a_nm.or(c.a_nm);
        c.t_kelvin = self.t_kelvin.or(c.t_kelvin);
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Continue an interrupted run in `--out`.
    #[arg(long)]
    pub resume: bool,
    /// Stop without saving once more than this many samples would be done
    /// (simulates an interrupt).
    #[arg(long, hide = true)]
    pub abort_after: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AbundanceArgs {
    /// Dataset CSV; its JSON sidecar must sit next to it.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Gates to evaluate; all six if omitted.
    #[arg(long = "gate")]
    pub gates: Vec<Gate>,
    /// Offset penalty of the fitness.
    #[arg(long, default_value_t = dnpu_core::sampling::DEFAULT_K)]
    pub k: f64,
    /// Largest fitness threshold.
    #[arg(long, default_value_t = 30.0)]
    pub f_max: f64,
    /// Number of thresholds from 0 to `--f-max`.
    #[arg(long, default_value_t = 301)]
    pub points: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HypervolumeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Cube centre, one voltage per control electrode, comma separated.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub center: Vec<f64>,
    /// Cube edge lengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub edges: Vec<f64>,
    #[arg(long)]
    pub gate: Gate,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    pub f_min: f64,
    #[arg(long, default_value_t = dnpu_core::sampling::DEFAULT_K)]
    pub k: f64,
    /// Global abundance of the gate at `--f-min`.
    #[arg(long, conflicts_with = "dataset")]
    pub p_abundance: Option<f64>,
    /// Global dataset to take the abundance from.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// KMC measurement steps per run.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    /// Directory for `oracle_check.json`; nothing is written if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.exit_code() == 0 => e.exit(),
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Abundance(a) => commands::abundance(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::Hypervolume(a) => commands::hypervolume(&a),
        Command::OracleCheck(a) => commands::oracle_check(&a),
    };
    if let Err(e) = result {
        eprintln!("dnpu: {e}");
        std::process::exit(e.exit_code());
    }
}
