//! `fissura` — command-line runner for phase-field fracture scenarios.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 non-convergence or verification
//! failure, 3 configuration error.

mod config;
mod output;
mod scenario;

use clap::{Parser, Subcommand};
use config::Config;
use scenario::{run_scenario, ScenarioError};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "fissura",
    version,
    about = "Phase-field fracture energies with unilateral crack constraints"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario described by a config file.
    Run {
        /// Path to an INI-style config file (see the README for the format).
        config: PathBuf,
        /// Override one config value; repeatable.
        #[arg(long = "override", value_name = "SECTION.KEY=VALUE")]
        overrides: Vec<String>,
        /// Suppress the summary on stdout and non-fatal warnings.
        #[arg(long)]
        quiet: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Cmd::Run { config, overrides, quiet } => run(&config, &overrides, quiet),
    };
    std::process::exit(code);
}

fn run(path: &Path, overrides: &[String], quiet: bool) -> i32 {
    if let Err(msg) = configure_threads() {
        eprintln!("fissura: {msg}");
        return 3;
    }
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("fissura: cannot read `{}`: {e}", path.display());
            return 1;
        }
    };
    let mut cfg = match Config::parse(&text) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("fissura: config error in `{}`: {e}", path.display());
            return 3;
        }
    };
    for spec in overrides {
        if let Err(e) = cfg.apply_override(spec) {
            eprintln!("fissura: config error: {e}");
            return 3;
        }
    }

    let artifacts = match run_scenario(&cfg) {
        Ok(artifacts) => artifacts,
        Err(ScenarioError::Config(msg)) => {
            eprintln!("fissura: config error: {msg}");
            return 3;
        }
        Err(ScenarioError::Run(msg)) => {
            eprintln!("fissura: run failed: {msg}");
            return 2;
        }
    };

    if !quiet {
        for warning in &artifacts.warnings {
            eprintln!("fissura: warning: {warning}");
        }
    }
    if let Some(dir) = cfg.get("output", "dir") {
        let dir = Path::new(dir);
        let mut writes = vec![("summary.txt", artifacts.summary.render())];
        if let Some(vtk) = &artifacts.vtk {
            writes.push(("solution.vtk", vtk.clone()));
        }
        if let Some(csv) = &artifacts.csv {
            writes.push(("energy_history.csv", csv.clone()));
        }
        for (name, content) in writes {
            if let Err(e) = output::write_file(dir, name, &content) {
                eprintln!("fissura: {e}");
                return 1;
            }
        }
    }
    if !quiet {
        print!("{}", artifacts.summary.render());
    }
    0
}

/// `FISSURA_THREADS=<n>` pins the global worker pool; unset keeps the
/// library default (one worker per logical CPU).
fn configure_threads() -> Result<(), String> {
    let Some(raw) = std::env::var_os("FISSURA_THREADS") else {
        return Ok(());
    };
    let raw = raw.to_string_lossy();
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("FISSURA_THREADS must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot configure the {n}-thread worker pool: {e}"))
}
