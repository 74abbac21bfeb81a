//! `qpr`: command-line driver. Every run writes its artifacts plus
//! `resolved-config.json` and `manifest.json` into the output directory.
//! Failures print one JSON line `{"error": category, "message": ...}` to
//! stderr and exit with the category's code.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use qpr::{Error, Result};
use serde_json::json;

use commands::{Artifacts, Optimizer};
use config::{ExperimentConfig, Precision};

#[derive(Parser)]
#[command(name = "qpr", version, about = "Pathway-resolved robust control of small driven quantum systems")]
struct Cli {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "QPR_THREADS")]
    threads: Option<usize>,
    /// Grid and truncation preset.
    #[arg(long, global = true, value_enum)]
    precision: Option<Precision>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the configured field; report the objective and Dyson tables.
    Simulate,
    /// Objective over a 2-D gene grid.
    Landscape,
    /// Decode pathways and rank significant parameters.
    Pathways,
    /// Asymptotic, Monte Carlo and leading-order moments.
    Moments,
    /// Run an optimizer.
    Optimize {
        #[arg(value_enum)]
        optimizer: Optimizer,
        /// Front JSON whose genomes seed the initial population.
        #[arg(long)]
        seed_front: Option<PathBuf>,
    },
    /// Optimality checks.
    Verify {
        #[command(subcommand)]
        what: Verify,
    },
    /// Reproduce a published table.
    Repro {
        #[command(subcommand)]
        what: Repro,
    },
}

#[derive(Subcommand)]
enum Verify {
    /// Nominal and expected gradient traces, residuals and Hessian rank.
    Pmp,
}

#[derive(Subcommand)]
enum Repro {
    /// Per-instance probability matrix against the reference table.
    Table3 {
        /// Directory with solutions.csv, amplitudes.csv and probabilities.csv.
        #[arg(long)]
        tables: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::Simulate => "simulate".into(),
            Command::Landscape => "landscape".into(),
            Command::Pathways => "pathways".into(),
            Command::Moments => "moments".into(),
            Command::Optimize { optimizer, .. } => format!("optimize {}", format!("{optimizer:?}").to_lowercase()),
            Command::Verify { .. } => "verify pmp".into(),
            Command::Repro { .. } => "repro table3".into(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        "config" => 3,
        "validation" => 4,
        "domain" => 5,
        "integration" => 6,
        "decoding" => 7,
        "io" => 8,
        _ => 9,
    }
}

fn write_all(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(e.to_string()))?;
    }
    let base = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.resolve(cli.seed, cli.precision, cli.out.as_deref())?;
    let out = PathBuf::from(&cfg.output);
    let resolved = serde_json::to_string_pretty(&cfg)?;
    write_all(&out, &[("resolved-config.json".into(), resolved)])?;

    let artifacts: Artifacts = match &cli.command {
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Landscape => commands::landscape(&cfg)?,
        Command::Pathways => commands::pathways(&cfg)?,
        Command::Moments => commands::moments(&cfg)?,
        Command::Optimize { optimizer, seed_front } => commands::optimize(&cfg, *optimizer, seed_front.as_deref())?,
        Command::Verify { what: Verify::Pmp } => commands::verify_pmp(&cfg)?,
        Command::Repro { what: Repro::Table3 { tables } } => commands::repro_table3(&cfg, tables.as_deref())?,
    };
    write_all(&out, &artifacts)?;
    let manifest = json!({
        "command": cli.command.name(),
        "qpr_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "threads": rayon::current_num_threads(),
        "precision": cfg.precision,
        "started_unix": started,
        "wall_time_s": start.elapsed().as_secs_f64(),
        "artifacts": artifacts.iter().map(|(n, _)| n).collect::<Vec<_>>(),
    });
    write_all(&out, &[("manifest.json".into(), serde_json::to_string_pretty(&manifest)?)])?;
    println!("{}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.category(), "message": e.to_string() }));
            ExitCode::from(exit_code(&e))
        }
    }
}
