use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mdi_decoy::oracle::{run_suite, SuiteConfig};
use mdi_decoy::scenario::{run_optimize, run_sweep, Scenario};
use mdi_decoy::Error;

const EXIT_INVALID: u8 = 1;
const EXIT_PROPERTY: u8 = 2;

/// Decoy-state bounds and key rates for MDI-QKD with three intensities.
#[derive(Parser)]
#[command(name = "mdi-decoy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds, error rates and key rates over a loss sweep.
    Sweep(RunArgs),
    /// Optimal signal intensity and key rate over a loss sweep.
    Optimize(RunArgs),
    /// Check every bound against random yield tables with known answers.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for every subcommand; only `verify` draws random numbers.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 picks one per core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct RunArgs {
    /// JSON scenario; the built-in default scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    instances: usize,
    /// Fixed truncation; cycles through 4, 6 and 10 when omitted.
    #[arg(long)]
    n_max: Option<usize>,
    /// Also compare against the LP optimum (instances with n_max <= 6).
    #[arg(long)]
    lp: bool,
    #[command(flatten)]
    common: Common,
}

enum Failure {
    Invalid(String),
    Property,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

fn load(config: Option<&Path>) -> Result<Scenario, Failure> {
    match config {
        None => Ok(Scenario::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
            Scenario::from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(p) => fs::write(p, text).map_err(|e| Failure::Invalid(format!("{}: {e}", p.display()))),
    }
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let config = SuiteConfig { instances: args.instances, seed: args.common.seed, n_max: args.n_max, lp: args.lp };
    let suite = run_suite(&config)?;
    println!("instances: {}", suite.reports.len());
    println!("{:<22} {:>9} {:>7} {:>16}", "check", "evaluated", "failed", "worst_margin");
    for s in suite.summary() {
        println!("{:<22} {:>9} {:>7} {:>16.6e}", s.name, s.evaluated, s.failed, s.worst_margin);
    }
    if let Some(p) = &args.common.out {
        emit(Some(p), &suite.margins_csv())?;
    }
    if suite.passed() {
        println!("all checks passed");
        Ok(())
    } else {
        println!("{} check(s) failed", suite.failures());
        Err(Failure::Property)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let threads = match &cli.command {
        Command::Sweep(a) | Command::Optimize(a) => a.common.threads,
        Command::Verify(a) => a.common.threads,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Sweep(a) => emit(a.common.out.as_deref(), &run_sweep(&load(a.config.as_deref())?)?),
        Command::Optimize(a) => emit(a.common.out.as_deref(), &run_optimize(&load(a.config.as_deref())?)?),
        Command::Verify(a) => verify(a),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Err(Failure::Property) => ExitCode::from(EXIT_PROPERTY),
    }
}
