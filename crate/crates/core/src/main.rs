use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use dapsgd::harness::{
    prepare_problem, prox_check, run_convergence_experiment, run_speedup_experiment,
    ExperimentConfig,
};
use dapsgd::Error;

/// Oracle deviation above which `prox-check` fails.
const PROX_CHECK_TOLERANCE: f64 = 1e-5;

#[derive(Parser)]
#[command(name = "dapsgd", version, about = "Asynchronous proximal SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence traces for every algorithm and seed.
    Converge {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes <out>_trace.csv and <out>_summary.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Threaded wall-clock speedup over worker counts.
    Speedup {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes <out>_speedup.csv.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated worker counts; overrides the config.
        #[arg(long, value_delimiter = ',')]
        workers: Option<Vec<usize>>,
    },
    /// Solve (or load from cache) the reference solution and print a summary.
    Reference {
        #[arg(long)]
        config: PathBuf,
        /// Also write the solution to <out>_reference.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare every proximal operator with the independent oracle.
    ProxCheck {
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
    ExitCode::FAILURE
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    if !path.is_file() {
        eprintln!(
            "{}",
            json!({ "error": "usage", "message": format!("config file not found: {}", path.display()) })
        );
        return Err(ExitCode::from(2));
    }
    ExperimentConfig::from_path(path).map_err(|e| fail(&e))
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::Converge { config, out } => {
            let cfg = load(&config)?;
            let record = run_convergence_experiment(&cfg, &out).map_err(|e| fail(&e))?;
            for a in &record.algorithms {
                println!(
                    "{} median_final_distance_sq={:e} median_average_distance_sq={:e}",
                    a.algorithm, a.median_final_distance_sq, a.median_average_distance_sq
                );
            }
        }
        Command::Speedup {
            config,
            out,
            workers,
        } => {
            let cfg = load(&config)?;
            let counts = workers.unwrap_or_else(|| cfg.worker_counts.clone());
            let rows = run_speedup_experiment(&cfg, &counts, &out).map_err(|e| fail(&e))?;
            for r in &rows {
                println!(
                    "{} {} workers={} wall_seconds={:.4} speedup={:.3} master_share={:.3}",
                    r.algorithm, r.regularizer, r.workers, r.wall_seconds, r.speedup, r.master_share
                );
            }
        }
        Command::Reference { config, out } => {
            let cfg = load(&config)?;
            let p = prepare_problem(&cfg).map_err(|e| fail(&e))?;
            let summary = json!({
                "config_digest": p.digest,
                "regularizer": p.regularizer.name(),
                "l_constant": p.bounds.l_constant,
                "mu_constant": p.bounds.mu_constant,
                "iterations": p.reference.iterations,
                "gradient_mapping_norm": p.reference.gradient_mapping_norm,
                "objective": p.reference.objective,
                "cached": p.reference_cached,
            });
            println!("{summary}");
            if let Some(prefix) = out {
                let mut s = prefix.into_os_string();
                s.push("_reference.json");
                let path = PathBuf::from(s);
                let body = serde_json::to_vec_pretty(&p.reference).map_err(|e| fail(&e.into()))?;
                std::fs::write(&path, body).map_err(|e| {
                    fail(&Error::Io {
                        path: path.display().to_string(),
                        source: e,
                    })
                })?;
            }
        }
        Command::ProxCheck { trials, seed } => {
            let rows = prox_check(trials, seed).map_err(|e| fail(&e))?;
            let mut ok = true;
            for r in &rows {
                let pass = r.max_deviation <= PROX_CHECK_TOLERANCE;
                ok &= pass;
                println!(
                    "{} instances={} max_deviation={:e} {}",
                    r.variant,
                    r.instances,
                    r.max_deviation,
                    if pass { "ok" } else { "FAIL" }
                );
            }
            if !ok {
                return Err(ExitCode::FAILURE);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
