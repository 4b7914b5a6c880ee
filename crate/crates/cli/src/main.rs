use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lindoptics_cli::config::OutputFormat;
use lindoptics_cli::run::{EXIT_INVALID, EXIT_OK};
use lindoptics_cli::{load_config, run, Overrides};

#[derive(Parser)]
#[command(name = "lindoptics", version, about = "Lindblad dynamics and neutron optics runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Worker threads for sweep points.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and check a config file and its inputs without running.
    Validate { config: PathBuf },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => code(EXIT_OK),
            Err(e) => {
                eprintln!("error: {e}");
                code(EXIT_INVALID)
            }
        },
        Command::Run {
            config,
            output,
            format,
            jobs,
            seed,
        } => {
            let overrides = Overrides {
                output,
                format: format.map(|f| match f {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                }),
                seed,
                jobs: Some(jobs as usize),
            };
            match run(&config, &overrides) {
                Ok(outcome) => {
                    for b in &outcome.breaches {
                        eprintln!("numeric breach: {b}");
                    }
                    code(outcome.exit_code)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
    }
}
