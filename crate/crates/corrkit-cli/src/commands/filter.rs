//! Forward-backward cycle filtering of a flow pair.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use corrkit::evalkit;

use crate::config::{usage, Config};
use crate::io;

#[derive(Args, Debug)]
pub struct FilterArgs {
    /// Forward flow (reference -> target).
    #[arg(long, value_name = "PATH")]
    forward: PathBuf,

    /// Backward flow (target -> reference).
    #[arg(long, value_name = "PATH")]
    backward: PathBuf,

    /// Cycle tolerance in pixels.
    #[arg(long, default_value_t = 1.0, value_name = "PX")]
    tau_c: f64,

    /// Confidence image output (grayscale PNG, 255 = confident).
    #[arg(long, value_name = "PATH")]
    conf: Option<PathBuf>,

    /// Sparse match text output.
    #[arg(long, value_name = "PATH")]
    matches: Option<PathBuf>,

    /// Grid stride for match extraction.
    #[arg(long, default_value_t = 1, value_name = "N")]
    stride: usize,
}

pub fn run(args: &FilterArgs, _cfg: &Config) -> Result<()> {
    if !(args.tau_c >= 0.0) {
        return Err(usage(format!("--tau-c {} must be >= 0", args.tau_c)));
    }
    if args.conf.is_none() && args.matches.is_none() {
        return Err(usage("nothing to write; pass --conf and/or --matches"));
    }
    let fwd = io::load_flow(&args.forward, None)?;
    let bwd = io::load_flow(&args.backward, None)?;
    let confidence = evalkit::cycle_consistency(&fwd, &bwd, args.tau_c);
    if let Some(path) = &args.conf {
        io::save_confidence_png(path, &confidence)?;
    }
    let mut kept = None;
    if let Some(path) = &args.matches {
        let set = evalkit::extract_matches(&fwd, &confidence, args.stride)?;
        io::save_matches(path, &set)?;
        kept = Some(set.len());
    }
    let total = confidence.width() * confidence.height();
    print!(
        "filter: {}/{} confident ({:.2}%)",
        confidence.confident_count(),
        total,
        100.0 * confidence.confident_count() as f64 / total as f64
    );
    match kept {
        Some(n) => println!(", {n} matches kept"),
        None => println!(),
    }
    Ok(())
}
