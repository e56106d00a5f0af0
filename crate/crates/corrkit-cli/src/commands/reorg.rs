//! Reorganizes a tree of stereo/depth/flow annotations into a unified
//! displacement-field tree plus a manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use corrkit::core::DisplacementField;
use corrkit::geometry;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::config::{usage, Config};
use crate::io;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// `.flo` / KITTI flow `.png` samples, copied through.
    Flow,
    /// Disparity `.pfm` / KITTI `.png` samples.
    Disparity,
    /// Depth `.pfm` samples, each with a sibling `<stem>.cams` pair.
    DepthPose,
}

impl Layout {
    fn mode(self) -> &'static str {
        match self {
            Layout::Flow => "flow",
            Layout::Disparity => "disp2flow",
            Layout::DepthPose => "depth2flow",
        }
    }

    fn claims(self, path: &Path) -> bool {
        let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
        matches!(
            (self, ext.as_deref()),
            (Layout::Flow, Some("flo" | "png"))
                | (Layout::Disparity, Some("pfm" | "png"))
                | (Layout::DepthPose, Some("pfm"))
        )
    }
}

#[derive(Args, Debug)]
pub struct ReorgArgs {
    /// Root of the source tree.
    #[arg(long, value_name = "DIR")]
    input: PathBuf,

    /// Root of the unified output tree.
    #[arg(long, value_name = "DIR")]
    output: PathBuf,

    /// Annotation layout of the source tree.
    #[arg(long, value_enum)]
    layout: Layout,

    /// Annotation-only vertical jitter, applied to every sample.
    #[arg(long, default_value_t = 0, value_name = "PX")]
    jitter_dy: i32,

    /// Annotation-only clockwise quarter turns (0..=3).
    #[arg(long, default_value_t = 0, value_name = "N")]
    rotate_turns: u8,
}

struct Row {
    path: String,
    source: String,
    valid_ratio: f64,
}

pub fn run(args: &ReorgArgs, _cfg: &Config) -> Result<()> {
    if args.rotate_turns > 3 {
        return Err(usage(format!("--rotate-turns {} must be 0..=3", args.rotate_turns)));
    }
    if !args.input.is_dir() {
        return Err(usage(format!("{}: not a directory", args.input.display())));
    }
    let output_abs = std::path::absolute(&args.output)
        .with_context(|| format!("resolving {}", args.output.display()))?;

    let mut samples: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(&args.input).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", args.input.display()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let path = entry.into_path();
        // A nested output directory must not be re-ingested as input.
        if std::path::absolute(&path).map(|p| p.starts_with(&output_abs)).unwrap_or(false) {
            continue;
        }
        if args.layout.claims(&path) {
            samples.push(path);
        }
    }
    samples.sort();

    let results: Vec<std::result::Result<Row, String>> = samples
        .par_iter()
        .map(|path| convert_sample(path, args).map_err(|e| format!("{}: {e:#}", path.display())))
        .collect();

    let mut rows = Vec::new();
    let mut failures = 0usize;
    for result in results {
        match result {
            Ok(row) => rows.push(row),
            Err(msg) => {
                eprintln!("reorg: skipping {msg}");
                failures += 1;
            }
        }
    }
    rows.sort_by(|a, b| a.path.cmp(&b.path));

    let mut manifest = String::from("path\tsource\tmode\tvalid_ratio\n");
    for row in &rows {
        manifest.push_str(&format!("{}\t{}\t{}\t{:.6}\n", row.path, row.source, args.layout.mode(), row.valid_ratio));
    }
    std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    let manifest_path = args.output.join("manifest.tsv");
    std::fs::write(&manifest_path, manifest).with_context(|| format!("writing {}", manifest_path.display()))?;

    println!(
        "reorg: {} converted, {} skipped -> {}",
        rows.len(),
        failures,
        args.output.display()
    );
    if failures > 0 && rows.is_empty() {
        anyhow::bail!("all {failures} samples failed to convert");
    }
    Ok(())
}

fn convert_sample(path: &Path, args: &ReorgArgs) -> Result<Row> {
    let mut flow = load_as_flow(path, args.layout)?;
    if args.jitter_dy != 0 {
        flow = geometry::jitter_flow_annotation(&flow, args.jitter_dy)?;
    }
    if args.rotate_turns != 0 {
        flow = geometry::rotate_flow_annotation(&flow, args.rotate_turns)?;
    }
    let source = path
        .strip_prefix(&args.input)
        .expect("samples come from walking the input root");
    let out_rel = source.with_extension("flo");
    io::save_flow(&args.output.join(&out_rel), &flow, Some("flo"))?;
    Ok(Row {
        path: path_string(&out_rel),
        source: path_string(source),
        valid_ratio: flow.valid_ratio(),
    })
}

fn load_as_flow(path: &Path, layout: Layout) -> Result<DisplacementField> {
    match layout {
        Layout::Flow => io::load_flow(path, None),
        Layout::Disparity => Ok(geometry::disparity_to_flow(&io::load_disparity(path, None)?)),
        Layout::DepthPose => {
            let cams = path.with_extension("cams");
            if !cams.is_file() {
                anyhow::bail!("missing camera pair {}", cams.display());
            }
            let (cam_ref, cam_tar) = io::load_camera_pair(&cams)?;
            let depth = io::load_depth(path)?;
            Ok(geometry::project_depth_to_flow(&depth, &cam_ref, &cam_tar))
        }
    }
}

/// Manifest paths use forward slashes on every platform.
fn path_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
