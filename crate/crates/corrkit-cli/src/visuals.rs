//! Inspection images. The flow rendering uses the fixed 55-bin color wheel
//! (RY 15, YG 6, GC 4, CB 11, BM 13, MR 6) so outputs are byte-stable.

use std::path::Path;

use anyhow::{Context, Result};
use corrkit::core::DisplacementField;
use corrkit::matching::ScoreVolume;

const SEGMENTS: [(usize, [f64; 3], [f64; 3]); 6] = [
    (15, [255.0, 0.0, 0.0], [255.0, 255.0, 0.0]),
    (6, [255.0, 255.0, 0.0], [0.0, 255.0, 0.0]),
    (4, [0.0, 255.0, 0.0], [0.0, 255.0, 255.0]),
    (11, [0.0, 255.0, 255.0], [0.0, 0.0, 255.0]),
    (13, [0.0, 0.0, 255.0], [255.0, 0.0, 255.0]),
    (6, [255.0, 0.0, 255.0], [255.0, 0.0, 0.0]),
];

fn color_wheel() -> Vec<[f64; 3]> {
    let mut wheel = Vec::with_capacity(55);
    for (bins, from, to) in SEGMENTS {
        for i in 0..bins {
            let t = i as f64 / bins as f64;
            wheel.push([
                from[0] + t * (to[0] - from[0]),
                from[1] + t * (to[1] - from[1]),
                from[2] + t * (to[2] - from[2]),
            ]);
        }
    }
    wheel
}

/// One pixel of the wheel rendering: direction picks the hue, magnitude
/// (relative to `max_radius`) desaturates toward white at zero.
fn wheel_color(wheel: &[[f64; 3]], du: f64, dv: f64, max_radius: f64) -> [u8; 3] {
    let (fu, fv) = if max_radius > 0.0 { (du / max_radius, dv / max_radius) } else { (0.0, 0.0) };
    let rad = (fu * fu + fv * fv).sqrt();
    let angle = (-fv).atan2(-fu) / std::f64::consts::PI;
    let fk = (angle + 1.0) / 2.0 * (wheel.len() as f64 - 1.0);
    let k0 = (fk.floor() as usize).min(wheel.len() - 1);
    let k1 = (k0 + 1) % wheel.len();
    let f = fk - k0 as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let mut col = ((1.0 - f) * wheel[k0][c] + f * wheel[k1][c]) / 255.0;
        if rad <= 1.0 {
            col = 1.0 - rad * (1.0 - col);
        } else {
            col *= 0.75;
        }
        out[c] = (255.0 * col).floor() as u8;
    }
    out
}

/// Renders a displacement field as a color-wheel PNG; invalid pixels are
/// black. Magnitudes are normalized by the field's own maximum.
pub fn save_flow_png(path: &Path, field: &DisplacementField) -> Result<()> {
    let wheel = color_wheel();
    let (w, h) = (field.width(), field.height());
    let mut max_radius = 0.0f64;
    for v in 0..h {
        for u in 0..w {
            if let Some((du, dv)) = field.get(u, v) {
                max_radius = max_radius.max((du * du + dv * dv).sqrt());
            }
        }
    }
    let mut pixels = Vec::with_capacity(w * h * 3);
    for v in 0..h {
        for u in 0..w {
            match field.get(u, v) {
                Some((du, dv)) => pixels.extend(wheel_color(&wheel, du, dv, max_radius)),
                None => pixels.extend([0, 0, 0]),
            }
        }
    }
    save_rgb_png(path, w, h, pixels)
}

/// Grayscale heatmap of one proposal's score slice, mapping [-1, 1] to
/// [0, 255]; out-of-bounds sentinel scores land at 0.
pub fn save_score_slice_png(path: &Path, volume: &ScoreVolume, k: usize) -> Result<()> {
    let (w, h) = (volume.width(), volume.height());
    let mut pixels = Vec::with_capacity(w * h);
    for v in 0..h {
        for u in 0..w {
            let s = volume.get(u, v, k).clamp(-1.0, 1.0);
            pixels.push(((s + 1.0) / 2.0 * 255.0).round() as u8);
        }
    }
    save_gray_png(path, w, h, pixels)
}

pub fn save_gray_png(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<()> {
    let img = image::GrayImage::from_raw(width as u32, height as u32, pixels)
        .expect("pixel buffer matches the dimensions");
    save_png(path, image::DynamicImage::ImageLuma8(img))
}

pub fn save_rgb_png(path: &Path, width: usize, height: usize, pixels: Vec<u8>) -> Result<()> {
    let img = image::RgbImage::from_raw(width as u32, height as u32, pixels)
        .expect("pixel buffer matches the dimensions");
    save_png(path, image::DynamicImage::ImageRgb8(img))
}

fn save_png(path: &Path, img: image::DynamicImage) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}
