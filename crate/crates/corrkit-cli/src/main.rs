//! Batch frontend over the corrkit library: format conversions, dataset
//! reorganization, census matching, cycle filtering, and evaluation.
//!
//! Exit codes: 0 on success, 2 for operator mistakes (bad flags, missing
//! or malformed inputs), 1 for everything else. Results go to files and
//! standard out, diagnostics to standard error.

mod commands;
mod config;
mod io;
mod visuals;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, GlobalArgs, Usage};

#[derive(Parser)]
#[command(name = "corrkit", version, about = "Dense correspondence toolkit")]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between flow, disparity, and depth annotations.
    Convert(commands::convert::ConvertArgs),
    /// Rewrite an annotation tree as displacement fields plus a manifest.
    Reorg(commands::reorg::ReorgArgs),
    /// Match two images with census descriptors.
    Match(commands::match_cmd::MatchArgs),
    /// Filter a forward/backward flow pair by cycle consistency.
    Filter(commands::filter::FilterArgs),
    /// Evaluate estimates against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Estimate a fundamental matrix from matches.
    Fmat(commands::fmat::FmatArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = || -> anyhow::Result<()> {
        let cfg = Config::resolve(&cli.globals)?;
        cfg.install_thread_pool()?;
        match &cli.command {
            Command::Convert(args) => commands::convert::run(args, &cfg),
            Command::Reorg(args) => commands::reorg::run(args, &cfg),
            Command::Match(args) => commands::match_cmd::run(args, &cfg),
            Command::Filter(args) => commands::filter::run(args, &cfg),
            Command::Eval(args) => commands::eval::run(args, &cfg),
            Command::Fmat(args) => commands::fmat::run(args, &cfg),
        }
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("corrkit: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Operator mistakes exit 2 (matching the argument parser); runtime
/// failures exit 1.
fn exit_code(e: &anyhow::Error) -> u8 {
    let operator_mistake = e.chain().any(|cause| {
        cause.is::<Usage>()
            || matches!(
                cause.downcast_ref::<corrkit::Error>(),
                Some(corrkit::Error::InvalidArgument(_))
            )
    });
    if operator_mistake {
        2
    } else {
        1
    }
}
