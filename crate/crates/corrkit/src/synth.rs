//! Seeded synthetic data: camera pairs, depth, flow fields, random-dot
//! stereograms, and occlusion scenes with exactly known ground truth.
//!
//! Everything here is driven by a caller-supplied generator, so any scene
//! can be reproduced from a seed. These generators double as test oracles:
//! the ground truth is known by construction, not by estimation.

use crate::core::{
    CameraModel, DepthMap, DepthVariant, DisparityMap, DisplacementField, Match, MatchSet,
};
use crate::error::{Error, Result};
use crate::matching::GrayImage;
use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::Rng;

/// Uniformly random rotation axis with angle drawn from
/// `[-max_angle, max_angle]` radians.
pub fn random_rotation<R: Rng>(rng: &mut R, max_angle: f64) -> Matrix3<f64> {
    let axis = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            break Unit::new_normalize(v);
        }
    };
    let angle = rng.gen_range(-max_angle..=max_angle);
    Rotation3::from_axis_angle(&axis, angle).into_inner()
}

/// Two pinhole cameras viewing the same scene: moderate focal lengths for
/// the given image size, a small reference pose, and a relative pose with
/// rotation up to ~0.08 rad and translation of norm in [0.2, 0.6].
pub fn random_camera_pair<R: Rng>(
    rng: &mut R,
    dims: (usize, usize),
) -> (CameraModel, CameraModel) {
    let (w, h) = (dims.0 as f64, dims.1 as f64);
    let intrinsics = |rng: &mut R| {
        let f = rng.gen_range(0.9..=1.4) * w.max(h);
        Matrix3::new(
            f,
            0.0,
            w / 2.0 + rng.gen_range(-0.05..=0.05) * w,
            0.0,
            f * rng.gen_range(0.95..=1.05),
            h / 2.0 + rng.gen_range(-0.05..=0.05) * h,
            0.0,
            0.0,
            1.0,
        )
    };
    let k1 = intrinsics(rng);
    let k2 = intrinsics(rng);
    let r1 = random_rotation(rng, 0.05);
    let t1 = Vector3::new(
        rng.gen_range(-0.1..=0.1),
        rng.gen_range(-0.1..=0.1),
        rng.gen_range(-0.1..=0.1),
    );
    let r_rel = random_rotation(rng, 0.08);
    let dir = loop {
        let v = Vector3::new(
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
            rng.gen_range(-1.0..=1.0),
        );
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            break v / n;
        }
    };
    let t_rel = dir * rng.gen_range(0.2..=0.6);
    let r2 = r_rel * r1;
    let t2 = t_rel + r_rel * t1;
    let cam1 = CameraModel::new(k1, r1, t1).expect("synthetic camera is valid");
    let cam2 = CameraModel::new(k2, r2, t2).expect("synthetic camera is valid");
    (cam1, cam2)
}

/// Per-pixel depth drawn uniformly from `z_range`, all pixels valid.
pub fn random_depth_map<R: Rng>(
    rng: &mut R,
    width: usize,
    height: usize,
    z_range: (f64, f64),
) -> Result<DepthMap> {
    let (lo, hi) = z_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "depth range ({lo}, {hi}) must satisfy 0 < lo < hi"
        )));
    }
    DepthMap::from_fn(width, height, DepthVariant::Source, |_, _| {
        Some(rng.gen_range(lo..=hi))
    })
}

/// Displacements uniform in `[-max_mag, max_mag]` per axis; each pixel is
/// independently invalidated with probability `invalid_frac`.
pub fn random_displacement_field<R: Rng>(
    rng: &mut R,
    width: usize,
    height: usize,
    max_mag: f64,
    invalid_frac: f64,
) -> Result<DisplacementField> {
    if !(max_mag >= 0.0) || !(0.0..=1.0).contains(&invalid_frac) {
        return Err(Error::InvalidArgument(
            "field magnitude must be >= 0 and invalid fraction in [0, 1]".into(),
        ));
    }
    DisplacementField::from_fn(width, height, |_, _| {
        if rng.gen_bool(invalid_frac) {
            None
        } else {
            Some((
                rng.gen_range(-max_mag..=max_mag),
                rng.gen_range(-max_mag..=max_mag),
            ))
        }
    })
}

/// Disparities uniform in `[0, max_d]`; each pixel is independently
/// invalidated with probability `invalid_frac`.
pub fn random_disparity_map<R: Rng>(
    rng: &mut R,
    width: usize,
    height: usize,
    max_d: f64,
    invalid_frac: f64,
) -> Result<DisparityMap> {
    if !(max_d >= 0.0) || !(0.0..=1.0).contains(&invalid_frac) {
        return Err(Error::InvalidArgument(
            "disparity bound must be >= 0 and invalid fraction in [0, 1]".into(),
        ));
    }
    DisparityMap::from_fn(width, height, |_, _| {
        if rng.gen_bool(invalid_frac) {
            None
        } else {
            Some(rng.gen_range(0.0..=max_d))
        }
    })
}

/// Independent uniform intensities in `[0, 1)`.
pub fn random_gray_image<R: Rng>(rng: &mut R, width: usize, height: usize) -> Result<GrayImage> {
    GrayImage::from_fn(width, height, |_, _| rng.gen::<f32>())
}

/// A rectified stereo pair with constant integer disparity and a known
/// occluded block.
#[derive(Debug, Clone)]
pub struct StereoScene {
    pub left: GrayImage,
    pub right: GrayImage,
    /// Ground truth on the left grid; invalid at occluded pixels and at the
    /// left border that has no right-image partner.
    pub disparity: DisparityMap,
    /// Row-major mask on the left grid: true where the right-image partner
    /// was overwritten by the occluder.
    pub occluded: Vec<bool>,
}

/// Random-dot stereogram: the right image is the left shifted by `shift`
/// pixels, with a square block of the right image overwritten by fresh
/// noise to emulate an occluder covering `occlusion_frac` of the area.
///
/// Left pixel (u, v) matches right pixel (u - shift, v), so ground-truth
/// disparity is `shift` wherever that partner exists and is unoccluded.
pub fn random_dot_stereogram<R: Rng>(
    rng: &mut R,
    width: usize,
    height: usize,
    shift: usize,
    occlusion_frac: f64,
) -> Result<StereoScene> {
    if shift >= width {
        return Err(Error::InvalidArgument(format!(
            "shift {shift} must be below the image width {width}"
        )));
    }
    if !(0.0..1.0).contains(&occlusion_frac) {
        return Err(Error::InvalidArgument(format!(
            "occlusion fraction {occlusion_frac} must be in [0, 1)"
        )));
    }
    let left = random_gray_image(rng, width, height)?;
    let mut right = GrayImage::from_fn(width, height, |u, v| {
        if u + shift < width {
            left.get(u + shift, v)
        } else {
            0.0
        }
    })?;
    // The right-edge band has no left partner; fill it with fresh noise.
    let mut right_data = right.data().to_vec();
    for v in 0..height {
        for u in width.saturating_sub(shift)..width {
            right_data[v * width + u] = rng.gen::<f32>();
        }
    }

    let mut occluded = vec![false; width * height];
    if occlusion_frac > 0.0 {
        let side = ((occlusion_frac * (width * height) as f64).sqrt().round() as usize)
            .clamp(1, height.min(width - shift));
        let bx = rng.gen_range(shift..=width - side);
        let by = rng.gen_range(0..=height - side);
        for v in by..by + side {
            for u in bx..bx + side {
                occluded[v * width + u] = true;
                right_data[v * width + (u - shift)] = rng.gen::<f32>();
            }
        }
    }
    right = GrayImage::new(width, height, right_data)?;

    let disparity = DisparityMap::from_fn(width, height, |u, v| {
        (u >= shift && !occluded[v * width + u]).then_some(shift as f64)
    })?;
    Ok(StereoScene { left, right, disparity, occluded })
}

/// Forward/backward flow of a foreground square translating over a static
/// background, with the exact occlusion mask.
#[derive(Debug, Clone)]
pub struct OcclusionScene {
    pub fwd: DisplacementField,
    pub bwd: DisplacementField,
    /// Row-major mask on the reference grid: background pixels covered by
    /// the square's target-frame footprint.
    pub occluded: Vec<bool>,
}

/// Builds the square-over-background scene. `square` is (x, y, side) in the
/// reference frame; `t` is the integer motion of the square. Both the
/// square and its translated footprint must stay inside the image.
pub fn occlusion_flow_scene(
    width: usize,
    height: usize,
    square: (usize, usize, usize),
    t: (i64, i64),
) -> Result<OcclusionScene> {
    let (sx, sy, side) = square;
    if side == 0 {
        return Err(Error::InvalidArgument("square side must be positive".into()));
    }
    let in_ref = sx + side <= width && sy + side <= height;
    let (tx0, ty0) = (sx as i64 + t.0, sy as i64 + t.1);
    let in_tar = tx0 >= 0
        && ty0 >= 0
        && tx0 + side as i64 <= width as i64
        && ty0 + side as i64 <= height as i64;
    if !in_ref || !in_tar {
        return Err(Error::InvalidArgument(
            "square must stay inside the image in both frames".into(),
        ));
    }
    let in_square = |u: usize, v: usize| u >= sx && u < sx + side && v >= sy && v < sy + side;
    let in_moved = |u: usize, v: usize| {
        let (iu, iv) = (u as i64, v as i64);
        iu >= tx0 && iu < tx0 + side as i64 && iv >= ty0 && iv < ty0 + side as i64
    };
    let fwd = DisplacementField::from_fn(width, height, |u, v| {
        Some(if in_square(u, v) { (t.0 as f64, t.1 as f64) } else { (0.0, 0.0) })
    })?;
    let bwd = DisplacementField::from_fn(width, height, |u, v| {
        Some(if in_moved(u, v) { (-t.0 as f64, -t.1 as f64) } else { (0.0, 0.0) })
    })?;
    let mut occluded = vec![false; width * height];
    for v in 0..height {
        for u in 0..width {
            occluded[v * width + u] = !in_square(u, v) && in_moved(u, v);
        }
    }
    Ok(OcclusionScene { fwd, bwd, occluded })
}

/// Exact inverse pair for a global translation: forward everywhere `t`,
/// backward everywhere `-t`.
pub fn translation_flow_pair(
    width: usize,
    height: usize,
    t: (f64, f64),
) -> Result<(DisplacementField, DisplacementField)> {
    let fwd = DisplacementField::filled(width, height, t.0, t.1)?;
    let bwd = DisplacementField::filled(width, height, -t.0, -t.1)?;
    Ok((fwd, bwd))
}

/// Exact correspondences between two cameras: reference pixels are drawn
/// uniformly, back-projected at a random depth, and reprojected into the
/// target view; samples landing outside either image are rejected.
pub fn epipolar_match_set<R: Rng>(
    rng: &mut R,
    cam1: &CameraModel,
    cam2: &CameraModel,
    dims: (usize, usize),
    count: usize,
) -> Result<MatchSet> {
    let (w, h) = dims;
    if w == 0 || h == 0 {
        return Err(Error::InvalidArgument("image dimensions must be nonzero".into()));
    }
    let mut list = Vec::with_capacity(count);
    let budget = 1000 * count.max(1);
    let mut tries = 0usize;
    while list.len() < count {
        tries += 1;
        if tries > budget {
            return Err(Error::Estimation(format!(
                "could not realize {count} correspondences, got {} after {budget} draws",
                list.len()
            )));
        }
        let u1 = rng.gen_range(0.0..w as f64);
        let v1 = rng.gen_range(0.0..h as f64);
        let z = rng.gen_range(4.0..=40.0);
        let x = cam1.back_project(u1, v1, z);
        let Some(p) = cam2.project(&x) else { continue };
        if !p.in_front {
            continue;
        }
        if p.u2 < 0.0 || p.u2 >= w as f64 || p.v2 < 0.0 || p.v2 >= h as f64 {
            continue;
        }
        list.push(Match { u1, v1, u2: p.u2, v2: p.v2, confidence: 1.0 });
    }
    MatchSet::new(dims, dims, list)
}

/// Replaces a fraction of matches with uniform random correspondences.
/// Returns the corrupted set and the ground-truth inlier mask (true where
/// the original match survived).
pub fn inject_outliers<R: Rng>(
    rng: &mut R,
    set: &MatchSet,
    frac: f64,
) -> Result<(MatchSet, Vec<bool>)> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::InvalidArgument(format!(
            "outlier fraction {frac} must be in [0, 1]"
        )));
    }
    let (tw, th) = set.tar_dims();
    let mut matches = set.matches().to_vec();
    let mut inlier = vec![true; matches.len()];
    for i in 0..matches.len() {
        if rng.gen_bool(frac) {
            matches[i].u2 = rng.gen_range(0.0..tw as f64);
            matches[i].v2 = rng.gen_range(0.0..th as f64);
            inlier[i] = false;
        }
    }
    let corrupted = MatchSet::new(set.ref_dims(), set.tar_dims(), matches)?;
    Ok((corrupted, inlier))
}
