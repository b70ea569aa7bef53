//! Command-line entry point: run experiments, compare reports, print norms
//! of saved fields, and prebuild grid caches.
//!
//! Exit codes: 0 success, 2 validation, 3 numerical failure, 4 budget.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hardsphere::config::RunConfig;
use hardsphere::{cache, report, Error};

#[derive(Parser)]
#[command(name = "hardsphere", version, about = "Deterministic hard-sphere Boltzmann solver on a periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Override the worker count from the configuration.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Field-by-field comparison of two JSON reports.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Maximum relative difference accepted.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Compare even when the embedded config hashes differ.
        #[arg(long)]
        force: bool,
    },
    /// Print the norm report of a saved field snapshot.
    Norms { snapshot: PathBuf },
    /// Prebuild the velocity-grid cache for a configuration.
    CacheGrid { config: PathBuf },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::InvalidParameter(_) => 2,
        Error::Budget(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // Machine-readable diagnostic on stderr.
            let kind = match err {
                Error::Config(_) | Error::InvalidParameter(_) => "validation",
                Error::Budget(_) => "budget",
                _ => "numerical",
            };
            eprintln!(
                "{}",
                serde_json::json!({ "error": format!("{err}"), "kind": kind })
            );
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, workers } => {
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.workers)
                .build_global()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            let artifacts = report::run(cfg)?;
            for f in artifacts.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Compare { a, b, tol, force } => {
            let diff = report::compare_reports(&a, &b, force)?;
            for (path, rel) in &diff.entries {
                println!("{path}: {rel:e}");
            }
            if diff.max_relative > tol {
                return Err(Error::Numerical(format!(
                    "max relative difference {:e} exceeds tolerance {tol:e}",
                    diff.max_relative
                )));
            }
            println!("reports agree within {tol:e}");
            Ok(())
        }
        Command::Norms { snapshot } => {
            let snap = hardsphere::field::read_snapshot(&snapshot)?;
            let grid = cache::load_grid_cached(
                snap.r,
                snap.n_v,
                snap.n_angular,
                &cache::cache_dir(),
            )?;
            let field = snap.into_field(grid)?;
            let report = field.energy_norm(0.5, 4.max(3))?;
            println!("{}", report.to_json());
            Ok(())
        }
        Command::CacheGrid { config } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = cache::cache_dir();
            let grid =
                cache::load_grid_cached(cfg.grid.r, cfg.grid.n_v, cfg.grid.n_angular, &dir)?;
            println!(
                "{}",
                cache::grid_cache_path(&dir, grid.r, grid.n_v, cfg.grid.n_angular).display()
            );
            Ok(())
        }
    }
}
