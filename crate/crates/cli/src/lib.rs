//! Command-line front end: configuration, subcommand dispatch and report
//! writing.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod report;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "msgwas", version, about = "Two-stage GWAS design, simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set design.cost_ratio=20`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    /// Master seed; overrides `seed` in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, env = "MSGWAS_OUT_DIR", default_value = "msgwas-out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Carrier probabilities by outcome and marker allele.
    Table1,
    /// Analytic power and null rate of two-stage designs.
    Power,
    /// Cost-optimal stage-I fraction and threshold.
    DesignOptimize,
    /// Simulate cohorts and run the two-stage pipeline.
    Simulate,
    /// Two-step gene-by-environment scans on simulated cohorts.
    Gxe,
    /// Multiplicity-adjusted p-values for a two-stage scan.
    Significance,
    /// Stratified resequencing plan and offsets.
    ReseqPlan,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Power => "power",
            Command::DesignOptimize => "design-optimize",
            Command::Simulate => "simulate",
            Command::Gxe => "gxe",
            Command::Significance => "significance",
            Command::ReseqPlan => "reseq-plan",
        }
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Resolves the configuration, runs the subcommand and writes its outputs
/// plus a manifest into the output directory. Returns the manifest path.
pub fn run(cli: &Cli) -> Result<PathBuf, CliError> {
    let started = now_ms();
    let mut config = Config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if cli.threads == Some(0) {
        return Err(CliError::invalid("threads", "must be at least 1"));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::invalid("threads", e.to_string()))?;
    let output = pool.install(|| match cli.command {
        Command::Table1 => commands::table1(&config),
        Command::Power => commands::power(&config),
        Command::DesignOptimize => commands::design_optimize(&config),
        Command::Simulate => commands::simulate(&config),
        Command::Gxe => commands::gxe(&config),
        Command::Significance => commands::significance(&config),
        Command::ReseqPlan => commands::reseq_plan(&config),
    })?;

    std::fs::create_dir_all(&cli.out_dir)?;
    let mut written = Vec::new();
    for t in &output.tables {
        let name = format!("{}.{}", t.name, cli.format.extension());
        let bytes = t.to_bytes(cli.format)?;
        write_file(&cli.out_dir, &name, &bytes)?;
        written.push((name, bytes));
    }
    for (name, bytes) in &output.files {
        write_file(&cli.out_dir, name, bytes)?;
        written.push((name.clone(), bytes.clone()));
    }
    let manifest = RunManifest::new(
        cli.command.name(),
        config,
        cli.threads,
        cli.format,
        started,
        now_ms(),
        &written,
    );
    let path = cli
        .out_dir
        .join(format!("{}_manifest.json", cli.command.name().replace('-', "_")));
    std::fs::write(&path, manifest.to_json())?;
    Ok(path)
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(dir.join(name), bytes).map_err(|e| {
        CliError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.join(name).display())))
    })
}
