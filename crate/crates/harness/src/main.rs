use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ttr_core::solvers::{SigmaBarMode, StepSchedule};
use ttr_core::StorageMode;
use ttr_harness::experiment::{run_experiment, ExperimentSpec, RunOptions};
use ttr_harness::problem::{generate, write_bundle, ProblemConfig};
use ttr_harness::recover::{is_solver_abort, recover, InitKind, RecoverArgs, SolverKind};
use ttr_harness::rip::{rip_check, RipConfig};
use ttr_harness::{plot, read_json, threads, write_json};

#[derive(Parser)]
#[command(name = "ttr", version, about = "Robust tensor-train recovery from corrupted linear measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Storage {
    Auto,
    Materialized,
    Streamed,
}

impl Storage {
    fn mode(self) -> StorageMode {
        match self {
            Storage::Auto => StorageMode::Auto,
            Storage::Materialized => StorageMode::Materialized,
            Storage::Streamed => StorageMode::Streamed,
        }
    }
}

fn parse_sigma_bar(s: &str) -> Result<SigmaBarMode, String> {
    match s {
        "from-init" => Ok(SigmaBarMode::FromInit),
        "true-value" => Ok(SigmaBarMode::TrueValue),
        v => v
            .parse::<f64>()
            .map(SigmaBarMode::UserOverride)
            .map_err(|_| format!("expected from-init, true-value or a number, got {v:?}")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a problem bundle from a JSON config.
    MakeProblem {
        config: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Overrides the config's storage mode.
        #[arg(long, value_enum)]
        storage: Option<Storage>,
    },
    /// Initialize and run a solver on a bundle.
    Recover {
        /// problem.json of a bundle.
        bundle: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, value_enum)]
        solver: SolverKind,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, value_enum, default_value = "truncated")]
        init: InitKind,
        /// Initial TT file for `--init provided`.
        #[arg(long)]
        x0: Option<PathBuf>,
        /// Truncation fraction of the spectral initialization; defaults to the bundle's p_s.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 1)]
        trace_every: usize,
        /// Stop once the relative error falls to this value.
        #[arg(long, default_value_t = 0.0)]
        target_rel_error: f64,
        /// from-init, true-value or a number.
        #[arg(long, default_value = "from-init", value_parser = parse_sigma_bar)]
        sigma_bar: SigmaBarMode,
        #[arg(long)]
        track_factor_distance: bool,
        /// Do not give the solver the ground truth.
        #[arg(long)]
        blind: bool,
        #[arg(long, value_enum, default_value = "auto")]
        storage: Storage,
    },
    /// Run a parameter sweep, resuming from an existing manifest.
    Experiment {
        spec: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Stop after this many newly computed cells.
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Probe the RIP constant and sharpness of a random ensemble.
    RipCheck {
        config: PathBuf,
        /// Where to write the JSON report.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render trace CSVs and summary heatmaps as SVG.
    Plot {
        /// A results directory or a single trace CSV.
        input: PathBuf,
        /// Output directory; defaults to the input directory.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<()> {
    threads::init_pool()?;
    match cli.command {
        Command::MakeProblem { config, out, storage } => {
            let mut cfg: ProblemConfig = read_json(&config)?;
            if let Some(s) = storage {
                cfg.storage = s.mode();
            }
            let problem = generate(&cfg)?;
            let path = write_bundle(&cfg, &problem, &out)?;
            println!("{}", path.display());
        }
        Command::Recover {
            bundle,
            out,
            solver,
            lambda,
            q,
            iters,
            init,
            x0,
            alpha,
            trace_every,
            target_rel_error,
            sigma_bar,
            track_factor_distance,
            blind,
            storage,
        } => {
            let summary = recover(&RecoverArgs {
                bundle,
                out,
                solver,
                schedule: StepSchedule::new(lambda, q)?,
                iters,
                init,
                x0,
                alpha,
                trace_every,
                target_rel_error,
                sigma_bar_mode: sigma_bar,
                track_factor_distance,
                blind,
                storage: storage.mode(),
            })?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Experiment { spec, out, max_cells } => {
            let spec: ExperimentSpec = read_json(&spec)?;
            let report = run_experiment(
                &spec,
                &out,
                RunOptions {
                    max_new_cells: max_cells,
                },
            )?;
            match report.summary {
                Some(s) => {
                    for c in &s.cells {
                        let k = &c.cell;
                        println!(
                            "cell {:4}: {} N={} d={} r={} m={} p_s={} lambda={} q={} success {}/{}",
                            k.index,
                            k.solver.name(),
                            k.n,
                            k.d,
                            k.r,
                            k.m,
                            k.p_s,
                            k.lambda,
                            k.q,
                            c.successes,
                            c.trials
                        );
                    }
                }
                None => println!(
                    "stopped after {} new cells ({} already done); rerun to resume",
                    report.computed, report.skipped
                ),
            }
        }
        Command::RipCheck { config, out } => {
            let cfg: RipConfig = read_json(&config)?;
            let report = rip_check(&cfg)?;
            for line in report.lines() {
                println!("{line}");
            }
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
        }
        Command::Plot { input, out } => {
            let out = match out {
                Some(o) => o,
                None if input.is_dir() => input.clone(),
                None => match input.parent() {
                    Some(p) => p.to_path_buf(),
                    None => bail!("cannot infer an output directory for {}", input.display()),
                },
            };
            for path in plot::plot(&input, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if is_solver_abort(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
