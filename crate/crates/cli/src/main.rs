mod config;
mod modes;
mod output;
mod svg;

use clap::Parser;
use config::{Mode, RunConfig};
use cuspflow_core::{Error, Result};
use output::Artifacts;
use std::path::PathBuf;
use std::process::ExitCode;

/// Singularity formation in pressureless gas flow: analysis, 1D and 2D runs,
/// and the acceptance suite.
#[derive(Parser, Debug)]
#[command(name = "cuspflow", version)]
struct Cli {
    mode: Mode,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn limit_threads() -> Result<()> {
    let Ok(v) = std::env::var("CUSPFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("CUSPFLOW_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))
}

fn run(cli: &Cli) -> Result<()> {
    limit_threads()?;
    let cfg = RunConfig::load(&cli.config)?;
    if cfg.mode != cli.mode {
        return Err(Error::Config(format!(
            "command-line mode {} does not match configured mode {}",
            cli.mode.name(),
            cfg.mode.name()
        )));
    }
    let dir = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("cuspflow-out"));
    let mut out = Artifacts::new(&dir)?;
    let result = match cfg.mode {
        Mode::Analyze => modes::analyze(&cfg, &mut out),
        Mode::Run1d => modes::run1d(&cfg, &mut out),
        Mode::Oracle1d => modes::oracle1d(&cfg, &mut out),
        Mode::Chart2d => modes::chart2d(&cfg, &mut out),
        Mode::Run2d => modes::run2d(&cfg, &mut out),
        Mode::Validate => modes::validate(&cfg, &mut out),
    };
    let written = out.finish(cfg.mode.name())?;
    let text = result?;
    print!("{text}");
    println!("{} artifacts in {} (manifest.json)", written.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cuspflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
