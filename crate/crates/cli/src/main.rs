use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fastlim_core::harness::{
    self, exit, load_config, oracle::OracleSetup, output::write_sweep_outputs,
    refine::RefinementSetup, Check, ExperimentConfig, HarnessError,
};

#[derive(Parser)]
#[command(name = "fastlim", version, about = "Fast-reaction limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines). Defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set params.rho=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the epsilon sweep and write CSV/JSON results.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write results here instead of the configured `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare both solvers with RK4 on spatially constant data.
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Spatial and temporal self-convergence study.
    Refine {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Response of the limiting system to shifted initial data.
    Stability {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Largest shift; the probe also uses delta/10 and delta/100.
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
}

fn config(args: &ConfigArgs) -> Result<ExperimentConfig, HarnessError> {
    Ok(load_config(args.config.as_deref(), &args.overrides)?)
}

fn report(checks: &[Check]) -> i32 {
    for c in checks {
        println!("{c}");
    }
    if checks.iter().all(|c| c.passed) {
        exit::PASS
    } else {
        exit::ACCEPTANCE_FAILURE
    }
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Sweep { cfg, out } => {
            let config = config(&cfg)?;
            let outcome = harness::run_sweep(&config)?;
            let dir = out.unwrap_or_else(|| config.output_dir.clone());
            for path in write_sweep_outputs(&outcome, &dir)? {
                eprintln!("wrote {}", path.display());
            }
            for r in &outcome.records {
                println!(
                    "eps={:.3e} err_R={:.4e} err_S={:.4e} manifold={:.4e} neg={:.4e} wall={:.2}s",
                    r.epsilon,
                    r.err_r_l2,
                    r.err_s_l2,
                    r.manifold_residual_l2,
                    r.negative_norm_final,
                    r.wall_time_seconds
                );
            }
            Ok(report(&outcome.checks()))
        }
        Command::Oracle { cfg } => {
            let config = config(&cfg)?;
            let rep = harness::run_homogeneous_oracle(&config, &OracleSetup::default())?;
            Ok(report(&rep.checks()))
        }
        Command::Refine { cfg } => {
            let config = config(&cfg)?;
            let rep = harness::run_refinement_study(&config, &RefinementSetup::default())?;
            Ok(report(&rep.checks()))
        }
        Command::Stability { cfg, delta } => {
            let config = config(&cfg)?;
            let rep = harness::run_stability_probe(&config, delta)?;
            Ok(report(&rep.checks()))
        }
    }
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
