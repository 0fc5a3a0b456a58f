use std::process::ExitCode;

use annmoc::IterationRecord;
use annmoc_cli::config::parse_kinds;
use annmoc_cli::output::float;
use annmoc_cli::{commands, CliError, CommonArgs, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "annmoc",
    version,
    about = "Slab transport by source iteration with a neural flux surrogate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write flux, history, summary and surrogate files.
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve with several estimator kinds and tabulate the errors.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated kinds, at least two (e.g. ann,mesh).
        #[arg(long, default_value = "ann,mesh")]
        kinds: String,
    },
    /// Write the fine-mesh reference flux of a problem2 variant.
    Oracle {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn log_iteration(prefix: &str, r: &IterationRecord) {
    eprintln!(
        "{prefix}iter {:4}  metric {:.3e}  threshold {:.3e}  loss {:.3e}  epochs {:5}  {:.2}s",
        r.iteration, r.metric, r.threshold, r.train_loss, r.epochs, r.seconds
    );
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { common } => {
            let cfg = RunConfig::from_args(&common)?;
            eprintln!("problem {} seed {}", cfg.problem, cfg.solver.seed);
            let outcome = commands::run(&cfg, |r| log_iteration("", r))?;
            println!(
                "converged={} iterations={}",
                outcome.result.converged,
                outcome.result.iterations()
            );
            if let Some(l2) = outcome.l2_error {
                println!("l2_error={}", float(l2));
            }
            println!("output={}", cfg.out.display());
            Ok(outcome.exit_code())
        }
        Command::Compare { common, kinds } => {
            let cfg = RunConfig::from_args(&common)?;
            let kinds = parse_kinds(&kinds)?;
            let outcome =
                commands::compare(&cfg, &kinds, |k, r| log_iteration(&format!("[{k}] "), r))?;
            println!(
                "{:<6} {:>9} {:>10} {:>12} {:>12} {:>9}",
                "kind", "converged", "iterations", "final_metric", "l2_error", "seconds"
            );
            for r in &outcome.rows {
                println!(
                    "{:<6} {:>9} {:>10} {:>12.3e} {:>12.3e} {:>9.2}",
                    r.kind, r.converged, r.iterations, r.final_metric, r.l2_error, r.seconds
                );
            }
            Ok(outcome.exit_code())
        }
        Command::Oracle { common } => {
            let cfg = RunConfig::from_args(&common)?;
            commands::oracle(&cfg)?;
            println!("output={}", cfg.out.display());
            Ok(annmoc_cli::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
