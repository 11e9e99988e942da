use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use polyfix_cli::config::{Command, Experiment};
use polyfix_cli::report::exit;
use polyfix_cli::run::{run_experiment, RunOptions};
use polyfix_cli::suite::run_suite;
use polyfix_cli::{format_landau_table, landau_table};

/// Fixed points, periodic orbits and fixed-point geometry of nonexpansive
/// maps under polyhedral norms.
#[derive(Parser)]
#[command(name = "polyfix", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lipschitz certificate of the map.
    Certify(RunArgs),
    /// Fixed points from random starts.
    Fix(RunArgs),
    /// Periodic orbits, their common period and the period audit.
    Orbit(RunArgs),
    /// Locked faces, V, the derivative projection and the structure audits.
    Structure(RunArgs),
    /// Run every config in a directory; writes summary.csv and suite.json.
    Suite(SuiteArgs),
    /// Permutation orders and Landau's function.
    Landau(LandauArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    starts: Option<usize>,
    /// Compare the locked faces with the brute-force face oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Directory of *.json configs.
    dir: PathBuf,
    /// Output directory for summary.csv and suite.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct LandauArgs {
    #[arg(long, default_value_t = 12)]
    max_n: usize,
    /// Write the table as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn single(args: &RunArgs, command: Command) -> Result<i32> {
    let exp = match Experiment::load(&args.config)
        .and_then(|e| e.with_overrides(args.seed, args.starts))
    {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(exit::CONFIG);
        }
    };
    let report = run_experiment(
        &exp,
        &[Command::Certify, command],
        RunOptions {
            oracle: args.oracle,
        },
    );
    write_or_print(args.out.as_deref(), &report.to_json())?;
    if !args.quiet {
        for m in &report.verdict.messages {
            eprintln!("{m}");
        }
        eprintln!("{}: exit {}", exp.config.name, report.exit_code());
    }
    Ok(report.exit_code())
}

fn suite(args: &SuiteArgs) -> Result<i32> {
    let report = match run_suite(
        &args.dir,
        args.seed,
        RunOptions {
            oracle: args.oracle,
        },
    ) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return Ok(exit::CONFIG);
        }
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    report.write_csv(&args.out.join("summary.csv"))?;
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(args.out.join("suite.json"), json)?;
    if !args.quiet {
        for row in report.rows() {
            eprintln!("{:<32} {:<20} exit {}", row.file, row.status, row.exit_code);
        }
    }
    Ok(report.exit_code)
}

fn landau(args: &LandauArgs) -> Result<i32> {
    let rows = match landau_table(args.max_n) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(exit::CONFIG);
        }
    };
    match &args.out {
        Some(p) => std::fs::write(p, serde_json::to_string_pretty(&rows)?)?,
        None => print!("{}", format_landau_table(&rows)),
    }
    Ok(exit::OK)
}

fn main() -> ExitCode {
    if let Some(threads) = std::env::var("POLYFIX_THREADS")
        .ok()
        .and_then(|s| s.parse().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let cli = Cli::parse();
    let code = match &cli.command {
        Cmd::Certify(a) => single(a, Command::Certify),
        Cmd::Fix(a) => single(a, Command::Fix),
        Cmd::Orbit(a) => single(a, Command::Orbit),
        Cmd::Structure(a) => single(a, Command::Structure),
        Cmd::Suite(a) => suite(a),
        Cmd::Landau(a) => landau(a),
    };
    match code {
        Ok(c) => ExitCode::from(c as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::CONFIG as u8)
        }
    }
}
