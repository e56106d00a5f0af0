//! Path-based loading and saving. The container is picked by file
//! extension unless an explicit format name overrides it.

use std::path::Path;

use anyhow::{Context, Result};
use corrkit::core::{CameraModel, ConfidenceMap, DepthMap, DepthVariant, DisparityMap, DisplacementField, Match, MatchSet};
use corrkit::formats;
use corrkit::matching::GrayImage;

use crate::config::usage;

fn ext_of(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| usage(format!("{}: no file extension to infer a format from", path.display())))
}

fn format_of(path: &Path, hint: Option<&str>, supported: &[&str], what: &str) -> Result<String> {
    let format = match hint {
        Some(h) => h.to_ascii_lowercase(),
        None => ext_of(path)?,
    };
    if !supported.contains(&format.as_str()) {
        return Err(usage(format!("{}: unsupported {what} format {format:?}", path.display())));
    }
    Ok(format)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Displacement fields: `flo` (native) or `png` (16-bit annotation).
pub fn load_flow(path: &Path, hint: Option<&str>) -> Result<DisplacementField> {
    let format = format_of(path, hint, &["flo", "png"], "flow")?;
    let bytes = read_bytes(path)?;
    let field = match format.as_str() {
        "flo" => formats::read_flo(&bytes),
        _ => formats::read_kitti_flow(&bytes),
    };
    field.with_context(|| format!("decoding {}", path.display()))
}

pub fn save_flow(path: &Path, field: &DisplacementField, hint: Option<&str>) -> Result<()> {
    let bytes = match format_of(path, hint, &["flo", "png"], "flow")?.as_str() {
        "flo" => formats::write_flo(field),
        _ => formats::write_kitti_flow(field)?,
    };
    write_bytes(path, &bytes)
}

/// Disparity maps: `pfm` (float) or `png` (16-bit annotation).
pub fn load_disparity(path: &Path, hint: Option<&str>) -> Result<DisparityMap> {
    let format = format_of(path, hint, &["pfm", "png"], "disparity")?;
    let bytes = read_bytes(path)?;
    let disp = match format.as_str() {
        "pfm" => formats::read_pfm(&bytes).and_then(|img| formats::pfm_to_disparity(&img)),
        _ => formats::read_kitti_disp(&bytes),
    };
    disp.with_context(|| format!("decoding {}", path.display()))
}

pub fn save_disparity(path: &Path, disp: &DisparityMap, hint: Option<&str>) -> Result<()> {
    let bytes = match format_of(path, hint, &["pfm", "png"], "disparity")?.as_str() {
        "pfm" => formats::write_pfm(&formats::disparity_to_pfm(disp)),
        _ => formats::write_kitti_disp(disp)?,
    };
    write_bytes(path, &bytes)
}

/// Depth maps ride in 1-channel PFM; +inf (or any non-positive value)
/// marks an invalid pixel, mirroring the disparity embedding.
pub fn load_depth(path: &Path) -> Result<DepthMap> {
    let bytes = read_bytes(path)?;
    let img = formats::read_pfm(&bytes).with_context(|| format!("decoding {}", path.display()))?;
    if img.channels != 1 {
        return Err(usage(format!("{}: depth PFM must have 1 channel, got {}", path.display(), img.channels)));
    }
    DepthMap::from_fn(img.width, img.height, DepthVariant::Source, |u, v| {
        let z = img.samples[v * img.width + u];
        (z.is_finite() && z > 0.0).then(|| z as f64)
    })
    .with_context(|| format!("decoding {}", path.display()))
}

pub fn save_depth(path: &Path, depth: &DepthMap) -> Result<()> {
    let samples = depth
        .z()
        .iter()
        .zip(depth.valid())
        .map(|(&z, &ok)| if ok { z as f32 } else { f32::INFINITY })
        .collect();
    let img = formats::PfmImage::new(depth.width(), depth.height(), 1, samples)?;
    write_bytes(path, &formats::write_pfm(&img))
}

/// Camera text holding the (reference, target) pair on its first two lines.
pub fn load_camera_pair(path: &Path) -> Result<(CameraModel, CameraModel)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cams = formats::read_cameras(&text).with_context(|| format!("decoding {}", path.display()))?;
    let n = cams.len();
    let mut it = cams.into_iter();
    match (it.next(), it.next()) {
        (Some(reference), Some(target)) => Ok((reference, target)),
        _ => Err(usage(format!("{}: camera pair needs 2 cameras, found {n}", path.display()))),
    }
}

pub fn load_gray_image(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).with_context(|| format!("decoding {}", path.display()))?;
    Ok(GrayImage::from_dynamic(&img)?)
}

const MATCH_HEADER: &str = "# corrkit match set";

/// Tab-separated match text: one `u1 v1 u2 v2 confidence` row per match,
/// with the grid sizes in structured comments. Floats use shortest
/// round-trip formatting, so emit then parse is exact.
pub fn save_matches(path: &Path, set: &MatchSet) -> Result<()> {
    let mut out = String::new();
    out.push_str(MATCH_HEADER);
    out.push('\n');
    out.push_str(&format!("# ref_dims {} {}\n", set.ref_dims().0, set.ref_dims().1));
    out.push_str(&format!("# tar_dims {} {}\n", set.tar_dims().0, set.tar_dims().1));
    out.push_str("# u1\tv1\tu2\tv2\tconfidence\n");
    for m in set.iter() {
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", m.u1, m.v1, m.u2, m.v2, m.confidence));
    }
    write_bytes(path, out.as_bytes())
}

pub fn load_matches(path: &Path) -> Result<MatchSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut ref_dims = None;
    let mut tar_dims = None;
    let mut matches = Vec::new();
    let parse_dims = |rest: &str, n: usize| -> Result<(usize, usize)> {
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let bad = || usage(format!("{}: line {n}: expected two grid sizes", path.display()));
        match fields[..] {
            [w, h] => Ok((w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    };
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# ref_dims") {
            ref_dims = Some(parse_dims(rest, n)?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# tar_dims") {
            tar_dims = Some(parse_dims(rest, n)?);
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| usage(format!("{}: line {n}: expected 5 numbers, got {line:?}", path.display())))?;
        match vals[..] {
            [u1, v1, u2, v2, confidence] => matches.push(Match { u1, v1, u2, v2, confidence }),
            _ => return Err(usage(format!("{}: line {n}: expected 5 numbers, got {}", path.display(), vals.len()))),
        }
    }
    let ref_dims = ref_dims.ok_or_else(|| usage(format!("{}: missing `# ref_dims W H` line", path.display())))?;
    let tar_dims = tar_dims.ok_or_else(|| usage(format!("{}: missing `# tar_dims W H` line", path.display())))?;
    Ok(MatchSet::new(ref_dims, tar_dims, matches)?)
}

/// 8-bit grayscale PNG of a confidence map, 255 at full confidence.
pub fn save_confidence_png(path: &Path, conf: &ConfidenceMap) -> Result<()> {
    let pixels: Vec<u8> = conf
        .values()
        .iter()
        .map(|&c| (c.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    crate::visuals::save_gray_png(path, conf.width(), conf.height(), pixels)
}
