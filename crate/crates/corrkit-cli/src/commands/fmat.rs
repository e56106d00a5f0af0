//! Robust fundamental-matrix estimation from a match text file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use corrkit::evalkit::{estimate_fundamental, RansacParams};

use crate::config::Config;
use crate::io;

#[derive(Args, Debug)]
pub struct FmatArgs {
    /// Match text input.
    #[arg(long, value_name = "PATH")]
    matches: PathBuf,

    /// RANSAC iterations.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    iters: usize,

    /// Sampson inlier threshold in pixels.
    #[arg(long, default_value_t = 1.0, value_name = "PX")]
    tau: f64,

    /// Optional text output: the three matrix rows.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

pub fn run(args: &FmatArgs, cfg: &Config) -> Result<()> {
    let set = io::load_matches(&args.matches)?;
    let params = RansacParams { iters: args.iters, inlier_tau: args.tau, seed: cfg.seed };
    let (f, mask) = estimate_fundamental(&set, &params)?;

    let m = f.matrix();
    let mut text = String::new();
    for r in 0..3 {
        text.push_str(&format!("{} {} {}\n", m[(r, 0)], m[(r, 1)], m[(r, 2)]));
    }
    print!("{text}");

    let inliers = mask.iter().filter(|&&ok| ok).count();
    let mean_sampson = set
        .iter()
        .zip(&mask)
        .filter(|(_, &ok)| ok)
        .map(|(mm, _)| f.sampson_distance((mm.u1, mm.v1), (mm.u2, mm.v2)))
        .sum::<f64>()
        / inliers.max(1) as f64;
    println!(
        "inliers {}/{} ({:.2}%), mean sampson {:.6} px",
        inliers,
        set.len(),
        100.0 * inliers as f64 / set.len() as f64,
        mean_sampson
    );

    if let Some(path) = &args.output {
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
