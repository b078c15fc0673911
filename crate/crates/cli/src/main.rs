use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rqmlab_core::io::{self, Overrides, RunError};
use rqmlab_core::scenarios::RunOptions;
use rqmlab_core::verify::{self, Level};

/// Seeded relational-QM experiments.
#[derive(Debug, Parser)]
#[command(name = "rqmlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// Output directory (default: $RQMLAB_OUT, then the working directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "off")]
        trace: Switch,
        /// How many leading trials the trace covers.
        #[arg(long, default_value_t = 100)]
        trace_trials: u64,
    },
    /// List the scenario catalog.
    List,
    /// Run the built-in invariant suites.
    Verify {
        #[arg(long, value_enum, default_value = "quick")]
        level: LevelArg,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn run(config: PathBuf, overrides: Overrides, out: Option<PathBuf>, opts: RunOptions) -> Result<i32, RunError> {
    let cfg = overrides.apply(io::load_config(&config)?);
    let dir = io::output_dir(out);
    let files = io::run_to_dir(&cfg, &dir, &opts)?;
    for a in &files.report.assertions {
        println!("{} {}: {}", if a.pass { "PASS" } else { "FAIL" }, a.name, a.detail);
    }
    for name in &files.manifest.outputs {
        println!("wrote {}", files.dir.join(name).display());
    }
    Ok(files.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, trials, out, trace, trace_trials } => {
            let opts = RunOptions { trace: trace == Switch::On, trace_trials };
            match run(config, Overrides { seed, trials }, out, opts) {
                Ok(c) => code(c),
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
        Command::List => {
            for line in io::catalog_lines() {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Command::Verify { level } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let report = verify::verify(level, &verify::born_sampler);
            for c in &report.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            code(if report.passed { 0 } else { 1 })
        }
    }
}
