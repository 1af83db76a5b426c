use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use repchain_cli::commands;
use repchain_cli::config::{load_config, RunConfig};
use repchain_cli::output::{emit, to_json};
use repchain_cli::{exit, exit_code};

#[derive(Debug, Parser)]
#[command(name = "repchain", version, about = "Quantum repeater chain simulation and hardware optimization")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file, or a JSON result whose config is reused.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a configuration key, as `section.key=value` or `key=value`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo estimate of fidelity and rate for the configured chain.
    Simulate,
    /// Genetic algorithm search for the cheapest hardware meeting the targets.
    Optimize,
    /// Closed-form analyses.
    Analyze {
        #[command(subcommand)]
        analysis: Analysis,
    },
}

#[derive(Debug, Subcommand)]
enum Analysis {
    /// Largest distance meeting the targets for several repeater counts.
    MaxDistance {
        #[arg(long, value_delimiter = ',', default_values_t = [0u32, 1, 3, 7])]
        repeaters: Vec<u32>,
    },
    /// QBER and secret key rate for a given end-to-end fidelity and rate.
    Skr {
        #[arg(long)]
        fidelity: f64,
        #[arg(long)]
        rate: f64,
    },
    /// Mean link time and purification waiting times.
    WaitingTime,
}

enum Failure {
    Validation(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<repchain::Error> for Failure {
    fn from(e: repchain::Error) -> Self {
        if exit_code(&e) == exit::VALIDATION {
            Failure::Validation(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS),
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::VALIDATION)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::RUNTIME)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let c = &cli.common;
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(Failure::Validation(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.into()))?;
    }
    let mut overrides = c.set.clone();
    if let Some(seed) = c.seed {
        overrides.push(format!("seed={seed}"));
    }
    let rc = load_config(c.config.as_deref(), &overrides).map_err(|e| Failure::Validation(e.into()))?;
    let out = c.out.as_deref();

    match cli.command {
        Command::Simulate => {
            let r = commands::simulate(&rc)?;
            write(&r, c.format, out, |r| r.to_csv())
        }
        Command::Optimize => optimize(&rc, c.format, out),
        Command::Analyze { analysis } => match analysis {
            Analysis::MaxDistance { repeaters } => {
                let r = commands::max_distance(&rc, &repeaters)?;
                write(&r, c.format, out, |r| r.to_csv())
            }
            Analysis::Skr { fidelity, rate } => {
                let r = commands::skr(fidelity, rate)?;
                write(&r, c.format, out, |r| r.to_csv())
            }
            Analysis::WaitingTime => {
                let r = commands::waiting_time(&rc)?;
                write(&r, c.format, out, |r| r.to_csv())
            }
        },
    }
}

fn write<T: Serialize>(
    record: &T,
    format: Format,
    out: Option<&Path>,
    csv: impl Fn(&T) -> anyhow::Result<String>,
) -> Result<(), Failure> {
    let text = match format {
        Format::Json => to_json(record)?,
        Format::Csv => csv(record)?,
    };
    emit(&text, out)?;
    Ok(())
}

/// CSV output is the generation log; the best genome then goes to a
/// sibling `<out>.best.json`, or follows the table on stdout.
fn optimize(rc: &RunConfig, format: Format, out: Option<&Path>) -> Result<(), Failure> {
    let r = commands::optimize(rc)?;
    match format {
        Format::Json => emit(&to_json(&r)?, out)?,
        Format::Csv => {
            emit(&r.log_csv()?, out)?;
            #[derive(Serialize)]
            struct Best<'a> {
                best: &'a repchain::hardware::Genome,
                best_cost: &'a repchain::optimizer::CostBreakdown,
                refined: &'a Option<repchain::optimizer::HillClimbResult>,
            }
            let best = to_json(&Best {
                best: &r.best,
                best_cost: &r.best_cost,
                refined: &r.refined,
            })?;
            match out {
                Some(p) => {
                    let mut name = p.as_os_str().to_owned();
                    name.push(".best.json");
                    emit(&best, Some(Path::new(&name)))?;
                }
                None => eprint!("{best}"),
            }
        }
    }
    Ok(())
}
