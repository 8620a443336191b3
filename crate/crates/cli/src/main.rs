use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rdslab_cli::{describe, run};

#[derive(Parser)]
#[command(
    name = "rdslab",
    version,
    about = "Pullback-attractor experiments for a stochastic reaction-diffusion equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Overrides `output.directory` from the config.
        #[arg(long, value_name = "DIR")]
        output_dir: Option<PathBuf>,
        /// Suppresses the per-check lines on stdout.
        #[arg(long)]
        quiet: bool,
    },
    /// Describe an experiment, its quantities, and its CSV columns.
    Describe { name: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Describe { name } => match describe(&name) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Run {
            config,
            output_dir,
            quiet,
        } => match run(&config, output_dir.as_deref()) {
            Ok(outcome) => {
                if !quiet {
                    for c in &outcome.checks {
                        let verdict = if c.passed { "PASS" } else { "FAIL" };
                        match (c.value, c.threshold) {
                            (Some(v), Some(t)) => println!("{verdict} {}: {v:e} (threshold {t:e})", c.name),
                            (Some(v), None) => println!("{verdict} {}: {v:e}", c.name),
                            _ => println!("{verdict} {}", c.name),
                        }
                    }
                    println!("summary: {}", outcome.summary_path.display());
                }
                ExitCode::from(outcome.exit_code())
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}
