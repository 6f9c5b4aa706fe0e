//! Command-line front end: load a JSON model config, run analyses, and emit
//! deterministic JSON reports and CSV curve data.
//!
//! Exit codes: 0 when every requested check passes, 1 on check failures,
//! 2 on configuration or usage errors.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, CommandOutcome};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "singular-flows",
    about = "Analyze vector fields with divide-by-zero singularities and geodesics of singular metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all randomized sampling (defaults to 0).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Singular points, spectra, resonance relation, degeneracy conditions,
    /// and smooth classification.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Shoot geodesics through a degenerate point and compare against
    /// closed-form references where they exist.
    Geodesics {
        #[command(flatten)]
        common: CommonArgs,
        /// Directory for curve CSV files.
        #[arg(long = "out-dir")]
        out_dir: Option<PathBuf>,
    },
    /// Structural checks: surface invariance, first-integral identity,
    /// singular-point limit conditions, Lagrangian consistency.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Series flattening and the resonant-jet coefficient on raw coefficient
    /// tables.
    #[command(name = "normal-form")]
    NormalForm {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(CliError::Config)
}

fn emit(outcome: CommandOutcome, out: Option<&PathBuf>) -> i32 {
    let rendered = report::render_json(&outcome.report);
    match out {
        Some(path) => {
            if let Err(e) = report::write_atomic(path, &rendered) {
                eprintln!("error: {e}");
                return 2;
            }
        }
        None => print!("{rendered}"),
    }
    if outcome.passed {
        0
    } else {
        1
    }
}

fn fail(err: CliError) -> i32 {
    let report = serde_json::json!({
        "errors": [{"message": err.message()}],
        "passed": false,
    });
    eprint!("{}", report::render_json(&report));
    2
}

/// Entry point used by the thin binary; returns the process exit code.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point over explicit arguments.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful exits; usage problems are 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Analyze { common } => match load_config(&common.config)
            .and_then(|cfg| commands::cmd_analyze(&cfg, common.seed))
        {
            Ok(outcome) => emit(outcome, common.out.as_ref()),
            Err(e) => fail(e),
        },
        Command::Verify { common } => match load_config(&common.config)
            .and_then(|cfg| commands::cmd_verify(&cfg, common.seed))
        {
            Ok(outcome) => emit(outcome, common.out.as_ref()),
            Err(e) => fail(e),
        },
        Command::Geodesics { common, out_dir } => match load_config(&common.config)
            .and_then(|cfg| commands::cmd_geodesics(&cfg, common.seed, out_dir.as_deref()))
        {
            Ok(outcome) => emit(outcome, common.out.as_ref()),
            Err(e) => fail(e),
        },
        Command::NormalForm { common } => match load_config(&common.config)
            .and_then(|cfg| commands::cmd_normal_form(&cfg, common.seed))
        {
            Ok(outcome) => emit(outcome, common.out.as_ref()),
            Err(e) => fail(e),
        },
    }
}
