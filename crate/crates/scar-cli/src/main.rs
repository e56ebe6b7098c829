//! `scar`: batch front-end for the magnetic strip scar benchmark.

mod config;
mod output;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use config::RunConfig;
use output::{OutDir, RunManifest};
use stages::{Pipeline, Stage};

/// Scarred states of a magnetic strip: semiclassical construction, exact
/// reference spectrum and their comparison.
#[derive(Parser, Debug)]
#[command(name = "scar", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML configuration; defaults reproduce the benchmark.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads; all cores when omitted.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    /// Stage to run, as an alternative to the subcommand.
    #[arg(long, global = true, value_name = "NAME")]
    stage: Option<Stage>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Bell orbit, focal points and Poincare section at the reference energy.
    Orbit,
    /// Monodromy and focal census at the quantized energies.
    Stability,
    /// Quantized scar energies.
    Quantize,
    /// Semiclassical scar fields on the real-space grid.
    Field,
    /// Exact spectrum and smallest-singular-value scan.
    ExactScan,
    /// Exact scar states on the real-space grid.
    ExactState,
    /// Husimi scores of exact states and scar windows.
    Husimi,
    /// Semiclassical versus exact comparison and acceptance checks.
    Compare,
    /// JSON report and text summary.
    Report,
    /// Every stage in order.
    All,
    /// Print the effective configuration as TOML and exit.
    ShowConfig,
}

impl Command {
    fn stage(self) -> Option<Stage> {
        Some(match self {
            Command::Orbit => Stage::Orbit,
            Command::Stability => Stage::Stability,
            Command::Quantize => Stage::Quantize,
            Command::Field => Stage::Field,
            Command::ExactScan => Stage::ExactScan,
            Command::ExactState => Stage::ExactState,
            Command::Husimi => Stage::Husimi,
            Command::Compare => Stage::Compare,
            Command::Report => Stage::Report,
            Command::All => Stage::All,
            Command::ShowConfig => return None,
        })
    }
}

/// Exit status: 0 when every check that ran passed, 1 when one failed.
fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if matches!(cli.command, Some(Command::ShowConfig)) {
        print!("{}", cfg.to_toml()?);
        return Ok(true);
    }
    let stage = stages::resolve(cli.command.and_then(Command::stage), cli.stage)?;
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("cannot size the thread pool")?;
    }

    let root = cfg.output.dir.clone();
    let previous = RunManifest::previous_stages(&root, &cfg);
    let mut pipeline = Pipeline::new(&cfg, OutDir::create(&root)?, previous)?;
    // Nothing is written before the inputs are known to be usable.
    pipeline.check_inputs(stage)?;
    pipeline.write_common()?;
    pipeline.run(stage)?;

    let checks = pipeline.check_records();
    let manifest = RunManifest::finish(&root, &cfg, pipeline.records.clone(), checks)?;
    for c in pipeline.checks.values() {
        println!("{}", c.line());
    }
    println!("{} files listed in {}", manifest.files.len(), root.join(output::MANIFEST).display());
    Ok(manifest.all_passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
