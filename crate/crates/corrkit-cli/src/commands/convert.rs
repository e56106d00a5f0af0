//! Parameter-free conversions between the correspondence formats.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use corrkit::geometry::{self, DepthMode};

use crate::config::{usage, Config};
use crate::{io, visuals};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Flow2disp,
    Disp2flow,
    Depth2flow,
    Flow2depth,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Flow2disp => "flow2disp",
            Mode::Disp2flow => "disp2flow",
            Mode::Depth2flow => "depth2flow",
            Mode::Flow2depth => "flow2depth",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DepthModeArg {
    Zu,
    Zv,
    Zlsm,
}

impl From<DepthModeArg> for DepthMode {
    fn from(m: DepthModeArg) -> Self {
        match m {
            DepthModeArg::Zu => DepthMode::Zu,
            DepthModeArg::Zv => DepthMode::Zv,
            DepthModeArg::Zlsm => DepthMode::Zlsm,
        }
    }
}

#[derive(Args, Debug)]
pub struct ConvertArgs {
    /// Conversion to perform.
    #[arg(long, value_enum)]
    mode: Mode,

    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    #[arg(long, value_name = "PATH")]
    output: PathBuf,

    /// Input container (flo, pfm, png); default inferred from the extension.
    #[arg(long, value_name = "FMT")]
    from: Option<String>,

    /// Output container (flo, pfm, png); default inferred from the extension.
    #[arg(long, value_name = "FMT")]
    to: Option<String>,

    /// Camera pair file; required by the depth conversions.
    #[arg(long, value_name = "PATH")]
    cams: Option<PathBuf>,

    /// |dv| tolerance when collapsing flow to disparity.
    #[arg(long, default_value_t = 0.0, value_name = "PX")]
    v_tol: f64,

    /// Depth recovery equation for flow2depth.
    #[arg(long, value_enum, default_value_t = DepthModeArg::Zlsm)]
    depth_mode: DepthModeArg,
}

impl ConvertArgs {
    fn camera_pair(&self) -> Result<(corrkit::core::CameraModel, corrkit::core::CameraModel)> {
        match &self.cams {
            Some(path) => io::load_camera_pair(path),
            None => Err(usage(format!("convert --mode {} needs --cams", self.mode.name()))),
        }
    }
}

pub fn run(args: &ConvertArgs, cfg: &Config) -> Result<()> {
    let from = args.from.as_deref();
    let to = args.to.as_deref();
    let ratio = match args.mode {
        Mode::Flow2disp => {
            if !(args.v_tol >= 0.0) {
                return Err(usage(format!("--v-tol {} must be >= 0", args.v_tol)));
            }
            let flow = io::load_flow(&args.input, from)?;
            let disp = geometry::flow_to_disparity(&flow, args.v_tol)?;
            io::save_disparity(&args.output, &disp, to)?;
            if cfg.emit_visuals {
                visuals::save_flow_png(&visual_path(&args.output), &geometry::disparity_to_flow(&disp))?;
            }
            disp.valid_ratio()
        }
        Mode::Disp2flow => {
            let disp = io::load_disparity(&args.input, from)?;
            let flow = geometry::disparity_to_flow(&disp);
            io::save_flow(&args.output, &flow, to)?;
            if cfg.emit_visuals {
                visuals::save_flow_png(&visual_path(&args.output), &flow)?;
            }
            flow.valid_ratio()
        }
        Mode::Depth2flow => {
            let (cam_ref, cam_tar) = args.camera_pair()?;
            let depth = io::load_depth(&args.input)?;
            let flow = geometry::project_depth_to_flow(&depth, &cam_ref, &cam_tar);
            io::save_flow(&args.output, &flow, to)?;
            if cfg.emit_visuals {
                visuals::save_flow_png(&visual_path(&args.output), &flow)?;
            }
            flow.valid_ratio()
        }
        Mode::Flow2depth => {
            let (cam_ref, cam_tar) = args.camera_pair()?;
            let flow = io::load_flow(&args.input, from)?;
            let depth = geometry::flow_to_depth(&flow, &cam_ref, &cam_tar, args.depth_mode.into());
            io::save_depth(&args.output, &depth)?;
            depth.valid_ratio()
        }
    };
    println!(
        "{}: {} -> {} ({:.2}% valid)",
        args.mode.name(),
        args.input.display(),
        args.output.display(),
        100.0 * ratio
    );
    Ok(())
}

fn visual_path(output: &Path) -> PathBuf {
    output.with_extension("vis.png")
}
