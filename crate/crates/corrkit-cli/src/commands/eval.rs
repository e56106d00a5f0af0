//! Metric evaluation against ground truth, per task.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use corrkit::evalkit::{self, FundamentalMatrix, MetricReport, MetricUnit, RansacParams};
use corrkit::geometry;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::config::{usage, Config};
use crate::io;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Flow,
    Stereo,
    Depth,
    Fmat,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Kv,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Metric family to evaluate.
    #[arg(long, value_enum)]
    task: Task,

    /// Estimate: a file, or a directory evaluated pairwise against --gt.
    #[arg(long, value_name = "PATH")]
    est: Option<PathBuf>,

    /// Ground truth matching --est.
    #[arg(long, value_name = "PATH")]
    gt: Option<PathBuf>,

    /// Match text input for the fmat task.
    #[arg(long, value_name = "PATH")]
    matches: Option<PathBuf>,

    /// Camera pair; fmat scores against their exact epipolar model
    /// instead of a robust estimate.
    #[arg(long, value_name = "PATH")]
    cams: Option<PathBuf>,

    /// RANSAC iterations for fmat without --cams.
    #[arg(long, default_value_t = 1000, value_name = "N")]
    iters: usize,

    /// Sampson inlier threshold in pixels for fmat without --cams.
    #[arg(long, default_value_t = 1.0, value_name = "PX")]
    tau: f64,

    /// Report style.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    format: OutputFormat,
}

pub fn run(args: &EvalArgs, cfg: &Config) -> Result<()> {
    if args.task == Task::Fmat {
        let reports = eval_fmat(args, cfg)?;
        print!("{}", render(&reports, args.format));
        return Ok(());
    }
    let (est, gt) = match (&args.est, &args.gt) {
        (Some(est), Some(gt)) => (est, gt),
        _ => return Err(usage(format!("eval --task {:?} needs --est and --gt", args.task))),
    };
    if est.is_dir() != gt.is_dir() {
        return Err(usage("--est and --gt must both be files or both be directories"));
    }
    if est.is_dir() {
        return eval_tree(args, est, gt);
    }
    let reports = eval_pair(args.task, est, gt)?;
    print!("{}", render(&reports, args.format));
    Ok(())
}

fn eval_pair(task: Task, est: &Path, gt: &Path) -> Result<Vec<MetricReport>> {
    match task {
        Task::Flow => {
            let est = io::load_flow(est, None)?;
            let gt = io::load_flow(gt, None)?;
            Ok(vec![
                evalkit::epe(&est, &gt)?,
                evalkit::bad_tau(&est, &gt, 1.0)?,
                evalkit::bad_tau(&est, &gt, 3.0)?,
                evalkit::d1_f1_all(&est, &gt)?,
            ])
        }
        Task::Stereo => {
            let est = geometry::disparity_to_flow(&io::load_disparity(est, None)?);
            let gt = geometry::disparity_to_flow(&io::load_disparity(gt, None)?);
            Ok(vec![
                evalkit::epe(&est, &gt)?,
                evalkit::bad_tau(&est, &gt, 3.0)?,
                evalkit::d1_f1_all(&est, &gt)?,
            ])
        }
        Task::Depth => {
            let est = io::load_depth(est)?;
            let gt = io::load_depth(gt)?;
            Ok(evalkit::depth_metrics(&est, &gt)?.into())
        }
        Task::Fmat => unreachable!("fmat is dispatched before pairwise evaluation"),
    }
}

fn eval_fmat(args: &EvalArgs, cfg: &Config) -> Result<Vec<MetricReport>> {
    let Some(path) = &args.matches else {
        return Err(usage("eval --task fmat needs --matches"));
    };
    let set = io::load_matches(path)?;
    let f = match &args.cams {
        Some(cams) => {
            let (cam_ref, cam_tar) = io::load_camera_pair(cams)?;
            FundamentalMatrix::from_cameras(&cam_ref, &cam_tar)?
        }
        None => {
            let params = RansacParams { iters: args.iters, inlier_tau: args.tau, seed: cfg.seed };
            evalkit::estimate_fundamental(&set, &params)?.0
        }
    };
    let dists: Vec<f64> = set
        .iter()
        .map(|m| f.sampson_distance((m.u1, m.v1), (m.u2, m.v2)))
        .collect();
    let inliers = dists.iter().filter(|&&d| d < args.tau).count();
    let mean = dists.iter().sum::<f64>() / dists.len() as f64;
    Ok(vec![
        evalkit::maa_epipolar(&set, &f, 10)?,
        MetricReport::new("inlier_ratio", 100.0 * inliers as f64 / set.len() as f64, MetricUnit::Percent, set.len())?,
        MetricReport::new("sampson_mean", mean, MetricUnit::Pixels, set.len())?,
    ])
}

/// Directory mode: ground truth is looked up at the same relative path,
/// allowing a different extension; files run in parallel, output in
/// sorted order, and a mean row closes the table.
fn eval_tree(args: &EvalArgs, est_root: &Path, gt_root: &Path) -> Result<()> {
    let mut est_files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(est_root).sort_by_file_name() {
        let entry = entry.with_context(|| format!("walking {}", est_root.display()))?;
        if entry.file_type().is_file() {
            est_files.push(entry.into_path());
        }
    }
    est_files.sort();
    if est_files.is_empty() {
        return Err(usage(format!("{}: no estimate files found", est_root.display())));
    }

    let results: Vec<(String, Result<Vec<MetricReport>>)> = est_files
        .par_iter()
        .map(|est| {
            let rel = est.strip_prefix(est_root).expect("files come from walking est_root");
            let result = find_gt(gt_root, rel).and_then(|gt| eval_pair(args.task, est, &gt));
            (rel.display().to_string(), result)
        })
        .collect();

    let mut sums: Vec<(String, MetricUnit, f64)> = Vec::new();
    let mut evaluated = 0usize;
    let mut failures = 0usize;
    for (rel, result) in results {
        match result {
            Ok(reports) => {
                println!("== {rel}");
                print!("{}", render(&reports, args.format));
                if sums.is_empty() {
                    sums = reports.iter().map(|r| (r.name().to_string(), r.unit(), 0.0)).collect();
                }
                for (slot, report) in sums.iter_mut().zip(&reports) {
                    slot.2 += report.value();
                }
                evaluated += 1;
            }
            Err(e) => {
                eprintln!("eval: {rel}: {e:#}");
                failures += 1;
            }
        }
    }
    if evaluated > 0 {
        let means: Vec<MetricReport> = sums
            .iter()
            .map(|(name, unit, sum)| MetricReport::new(name.clone(), sum / evaluated as f64, *unit, evaluated))
            .collect::<corrkit::Result<_>>()?;
        println!("== mean over {evaluated} files");
        print!("{}", render(&means, args.format));
    }
    if failures > 0 {
        anyhow::bail!("{failures} of {} evaluations failed", failures + evaluated);
    }
    Ok(())
}

fn find_gt(gt_root: &Path, rel: &Path) -> Result<PathBuf> {
    let exact = gt_root.join(rel);
    if exact.is_file() {
        return Ok(exact);
    }
    for ext in ["flo", "pfm", "png"] {
        let candidate = gt_root.join(rel).with_extension(ext);
        if candidate.is_file() {
            return Ok(candidate);
        }
    }
    anyhow::bail!("no ground truth for {} under {}", rel.display(), gt_root.display())
}

fn render(reports: &[MetricReport], format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => evalkit::format_table(reports),
        OutputFormat::Kv => evalkit::format_kv(reports),
    }
}
