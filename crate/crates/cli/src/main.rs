use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slantwarp::runner::{check_paper, run, RunOptions};
use slantwarp::scenario::{builtin, Scenario, BUILTIN_NAMES};

/// Verify semi-slant and warped-product submanifold geometry at sampled
/// points.
///
/// Exit status: 0 when every check agrees with its declared expectation,
/// 1 on a verification failure, 2 on bad input.
#[derive(Parser)]
#[command(name = "slantwarp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a builtin scenario.
    Builtin {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUILTIN_NAMES))]
        name: String,
        /// Slant constant for `example2`, in radians, strictly between 0 and π/2.
        theta0: Option<f64>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run every builtin scenario, including the negative controls.
    CheckPaper {
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// Also write the report as JSON to this path.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled points (seeded boxes only).
    #[arg(long)]
    samples: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

impl Flags {
    fn options(&self) -> Result<RunOptions, String> {
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(format!("--tol-scale must be positive, got {}", self.tol_scale));
        }
        if self.samples == Some(0) {
            return Err("--samples must be positive".into());
        }
        Ok(RunOptions {
            seed: self.seed,
            samples: self.samples,
            tol_scale: self.tol_scale,
        })
    }
}

fn write_report(path: &Option<PathBuf>, json: String) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => Ok(()),
    }
}

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_one(scenario: &Scenario, flags: &Flags) -> ExitCode {
    let opts = match flags.options() {
        Ok(o) => o,
        Err(e) => return usage_error(e),
    };
    match run(scenario, &opts) {
        Ok(report) => {
            print!("{report}");
            if let Err(e) = write_report(&flags.report, report.to_json()) {
                return usage_error(e);
            }
            verdict(report.as_expected)
        }
        Err(e) => usage_error(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, flags } => {
            let text = match std::fs::read_to_string(&file) {
                Ok(t) => t,
                Err(e) => return usage_error(format!("cannot read {}: {e}", file.display())),
            };
            match Scenario::load(&text) {
                Ok(s) => run_one(&s, &flags),
                Err(e) => usage_error(e),
            }
        }
        Command::Builtin { name, theta0, flags } => match builtin(&name, theta0) {
            Ok(s) => run_one(&s, &flags),
            Err(e) => usage_error(e),
        },
        Command::CheckPaper { flags } => {
            let opts = match flags.options() {
                Ok(o) => o,
                Err(e) => return usage_error(e),
            };
            match check_paper(&opts) {
                Ok(suite) => {
                    print!("{suite}");
                    if let Err(e) = write_report(&flags.report, suite.to_json()) {
                        return usage_error(e);
                    }
                    verdict(suite.as_expected)
                }
                Err(e) => usage_error(e),
            }
        }
    }
}
