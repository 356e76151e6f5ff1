mod config;
mod experiments;
mod output;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::{Config, Params};
use experiments::Failure;

#[derive(Parser)]
#[command(
    name = "billiard",
    version,
    about = "Seeded experiments on the one-row periodic Lorentz gas"
)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
    #[command(flatten)]
    params: Params,
}

#[derive(Subcommand, Clone, Copy)]
enum Experiment {
    /// One trajectory segment from --x/--y/--angle or a seeded Liouville point.
    Simulate,
    /// Escape speeds and directions of Liouville samples.
    RotationSet,
    /// Realize a word as a genuine orbit segment.
    Realize,
    /// Periodic orbit escaping along a word, optionally slowed to --speed.
    Orbit,
    /// Worst passage times of the four letter-pair cases.
    Passages,
    /// Itinerary count and Lyapunov estimates at one (n, r).
    Entropy,
    /// Lyapunov exponent against the radius.
    Lyapunov,
    /// Entropy estimates over --n-values (and --r-values).
    Sweep,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::RotationSet => "rotation-set",
            Experiment::Realize => "realize",
            Experiment::Orbit => "orbit",
            Experiment::Passages => "passages",
            Experiment::Entropy => "entropy",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Sweep => "sweep",
        }
    }
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_FAILURE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let params = match &cli.params.config {
        Some(path) => match Params::load(path) {
            Ok(file) => file.overlay(cli.params.clone()),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(CONFIG_ERROR);
            }
        },
        None => cli.params.clone(),
    };
    let cfg = match Config::resolve(cli.experiment.name(), params) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    let started = Instant::now();
    let outcome = pool.install(|| experiments::run(&cfg));
    let wall = started.elapsed().as_secs_f64();
    match outcome {
        Ok(degenerate) => {
            let manifest = json!({
                "config": cfg,
                "version": env!("CARGO_PKG_VERSION"),
                "wall_time_s": wall,
                "degenerate": degenerate,
            });
            if let Err(e) = output::write_json(&cfg.out.join("manifest.json"), &manifest) {
                eprintln!("error: writing manifest: {e}");
                return ExitCode::FAILURE;
            }
            if degenerate.dropped > 0 {
                eprintln!(
                    "warning: {} samples dropped as degenerate",
                    degenerate.dropped
                );
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(NUMERICAL_FAILURE)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
