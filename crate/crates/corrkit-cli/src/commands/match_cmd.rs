//! Census-descriptor matching: score volume over displacement proposals,
//! argmax readout.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use corrkit::matching::{self, ProposalSet};

use crate::config::{usage, Config};
use crate::{io, visuals};

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Reference image (any PNG; converted to grayscale).
    #[arg(long, value_name = "PATH")]
    input1: PathBuf,

    /// Target image.
    #[arg(long, value_name = "PATH")]
    input2: PathBuf,

    /// Disparity map (.pfm/.png) or flow field (.flo), chosen by extension.
    #[arg(long, value_name = "PATH")]
    output: PathBuf,

    /// Census window side length (odd, >= 3).
    #[arg(long, default_value_t = 7, value_name = "PX")]
    window: usize,

    /// Disparity proposal count 0..N; the output must be a disparity map.
    #[arg(long, value_name = "N", conflicts_with = "radius")]
    levels: Option<usize>,

    /// 2D proposal window radius; the output must be a flow field.
    #[arg(long, value_name = "PX")]
    radius: Option<usize>,
}

pub fn run(args: &MatchArgs, cfg: &Config) -> Result<()> {
    let flow_output = matches!(
        args.output.extension().and_then(|e| e.to_str()),
        Some("flo")
    );
    let proposals = match (args.levels, args.radius) {
        (Some(levels), None) => ProposalSet::disparity_range(levels)?,
        (None, Some(radius)) => ProposalSet::window(radius),
        (None, None) => {
            if flow_output {
                ProposalSet::window(2)
            } else {
                ProposalSet::disparity_range(16)?
            }
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    };

    let reference = io::load_gray_image(&args.input1)?;
    let target = io::load_gray_image(&args.input2)?;
    let f_ref = matching::census_descriptor(&reference, args.window)?;
    let f_tar = matching::census_descriptor(&target, args.window)?;
    let volume = matching::cosine_score_volume(&f_ref, &f_tar, &proposals)?;

    let ratio = if flow_output {
        let flow = matching::argmax_regress(&volume);
        io::save_flow(&args.output, &flow, None)?;
        if cfg.emit_visuals {
            visuals::save_flow_png(&args.output.with_extension("vis.png"), &flow)?;
        }
        flow.valid_ratio()
    } else {
        if volume.proposals().kind() != matching::ProposalKind::DisparityRange {
            return Err(usage("2D proposals need a .flo output; use --levels for disparity"));
        }
        let disp = matching::argmax_disparity(&volume)?;
        io::save_disparity(&args.output, &disp, None)?;
        disp.valid_ratio()
    };

    if cfg.emit_visuals {
        emit_slices(&args.output, &volume)?;
    }
    println!(
        "match: {} x {} -> {} ({:.2}% valid)",
        args.input1.display(),
        args.input2.display(),
        args.output.display(),
        100.0 * ratio
    );
    Ok(())
}

fn emit_slices(output: &Path, volume: &corrkit::matching::ScoreVolume) -> Result<()> {
    for k in 0..volume.proposals().len() {
        let (fu, fv) = volume.proposals().get(k);
        let name = format!("slice_{k:02}_f{fu}_{fv}.png");
        visuals::save_score_slice_png(&output.with_extension(name), volume, k)?;
    }
    Ok(())
}
