use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sgl_cli::commands::{self, default_workers, output_dir, BUNDLED_EDGE_LIST};
use sgl_cli::edgelist::{load_edge_list, parse_edge_list};
use sgl_cli::{CliError, ExperimentConfig, Method};

#[derive(Parser)]
#[command(name = "sgl", version, about = "Signed graph learning with hidden nodes: experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config; every key is optional.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Restrict to one method: sgl-hncs, scsgl or gl.
    #[arg(long, value_name = "NAME")]
    method: Option<String>,
    /// Base seed; trial t uses seed + t.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Maximum number of concurrent trials.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset: graph, observed signals, covariance, partition.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Learn from a dataset directory and score against its ground truth.
    Learn {
        /// Directory written by `generate`.
        #[arg(long, value_name = "DIR")]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Factorial sweep over methods, hidden or signal counts, and trials.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Use a signed edge list as ground truth and sweep the signal count.
    Realdata {
        /// `src dst weight` lines; defaults to the bundled 50-node network.
        edges: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(m) = &common.method {
        m.parse::<Method>()?;
        cfg.methods = vec![m.clone()];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { common } => {
            let cfg = load_config(&common)?;
            commands::generate(&cfg, &output_dir(common.out, &cfg, "dataset"))
        }
        Command::Learn { dataset, common } => {
            let cfg = load_config(&common)?;
            let method = cfg.parsed_methods()?[0];
            let out = output_dir(common.out, &cfg, "learn");
            let outcome = commands::learn(&cfg, &dataset, method, &out)?;
            for row in &outcome.rows {
                log::info!("tau {}: fscore {:.4} relerr {:.4}", row.tau, row.fscore, row.relerr);
            }
            match outcome.failure {
                Some(reason) => Err(CliError::Solver(reason)),
                None => Ok(()),
            }
        }
        Command::Sweep { common } => {
            let cfg = load_config(&common)?;
            let workers = common.workers.unwrap_or_else(default_workers);
            let rows = commands::sweep(&cfg, &output_dir(common.out, &cfg, "sweep"), workers)?;
            log::info!("wrote {} rows", rows.len());
            Ok(())
        }
        Command::Realdata { edges, common } => {
            let cfg = load_config(&common)?;
            let workers = common.workers.unwrap_or_else(default_workers);
            let (list, source) = match &edges {
                Some(path) => (load_edge_list(path)?, path.display().to_string()),
                None => (parse_edge_list(BUNDLED_EDGE_LIST.as_bytes())?, "bundled:two_factions_50".to_string()),
            };
            let rows = commands::realdata(&cfg, &list, &source, &output_dir(common.out, &cfg, "realdata"), workers)?;
            log::info!("wrote {} rows", rows.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
