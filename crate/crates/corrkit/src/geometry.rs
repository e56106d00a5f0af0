//! Conversions between displacement, disparity, and depth, plus the stereo
//! training augmentations.
//!
//! Displacement is the hub representation: disparity is the special case
//! `(du, dv) = (-d, 0)` of a rectified pair, and depth converts to and from
//! displacement through the pose-warp algebra of [`crate::core`]. All
//! conversions invalidate pixels softly (mask, never error) when a
//! denominator or projective scale falls below the configured cutoffs.

use crate::core::{
    compose_camera_pair, CameraModel, DepthMap, DepthVariant, DisparityMap, DisplacementField,
};
use crate::error::{Error, Result};
use crate::matching::GrayImage;
use rand::{Rng, SeedableRng};

/// Numerical cutoffs for the depth conversions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomOptions {
    /// Depth equations with `|denominator|` (or `A^T A`) below this are
    /// invalidated.
    pub eps_den: f64,
    /// Projections with scale `s2` at or below this are invalidated.
    pub eps_s: f64,
}

impl Default for GeomOptions {
    fn default() -> Self {
        Self {
            eps_den: 1e-6,
            eps_s: 1e-9,
        }
    }
}

/// Which per-pixel depth formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthMode {
    /// Horizontal projection equation only.
    Zu,
    /// Vertical projection equation only.
    Zv,
    /// Closed-form least squares over both equations.
    Zlsm,
}

impl DepthMode {
    fn variant(self) -> DepthVariant {
        match self {
            DepthMode::Zu => DepthVariant::Zu,
            DepthMode::Zv => DepthVariant::Zv,
            DepthMode::Zlsm => DepthVariant::Zlsm,
        }
    }
}

/// Reads disparity out of a displacement field: `d = -du` wherever the
/// vertical component stays within `v_tol` and the disparity is
/// non-negative; everything else is masked invalid.
pub fn flow_to_disparity(field: &DisplacementField, v_tol: f64) -> Result<DisparityMap> {
    if !(v_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "vertical tolerance must be >= 0, got {v_tol}"
        )));
    }
    DisparityMap::from_fn(field.width(), field.height(), |u, v| match field.get(u, v) {
        Some((du, dv)) if dv.abs() <= v_tol && -du >= 0.0 => Some(-du),
        _ => None,
    })
}

/// Embeds disparity as displacement: `(du, dv) = (-d, 0)`.
/// `flow_to_disparity(disparity_to_flow(d), any v_tol)` is exact.
pub fn disparity_to_flow(disp: &DisparityMap) -> DisplacementField {
    DisplacementField::from_fn(disp.width(), disp.height(), |u, v| {
        disp.get(u, v).map(|d| (-d, 0.0))
    })
    .expect("disparity dimensions are validated at construction")
}

/// Projects per-pixel depth into the target view and returns the resulting
/// displacement. Pixels with invalid depth or projective scale at or below
/// `eps_s` are masked invalid.
pub fn project_depth_to_flow(
    depth: &DepthMap,
    cam_ref: &CameraModel,
    cam_tar: &CameraModel,
) -> DisplacementField {
    project_depth_to_flow_with(depth, cam_ref, cam_tar, &GeomOptions::default())
}

/// [`project_depth_to_flow`] with explicit cutoffs.
pub fn project_depth_to_flow_with(
    depth: &DepthMap,
    cam_ref: &CameraModel,
    cam_tar: &CameraModel,
    opts: &GeomOptions,
) -> DisplacementField {
    let warp = compose_camera_pair(cam_ref, cam_tar);
    DisplacementField::from_fn(depth.width(), depth.height(), |u, v| {
        let z = depth.get(u, v)?;
        let p = warp.warp_homogeneous(u as f64, v as f64, z);
        if p.z <= opts.eps_s {
            return None;
        }
        Some((p.x / p.z - u as f64, p.y / p.z - v as f64))
    })
    .expect("depth dimensions are validated at construction")
}

/// Recovers per-pixel depth from a displacement field and the camera pair.
/// A pixel is invalidated when the selected equation's denominator (or
/// `A^T A` for least squares) falls below `eps_den`, or the recovered depth
/// is non-positive.
pub fn flow_to_depth(
    field: &DisplacementField,
    cam_ref: &CameraModel,
    cam_tar: &CameraModel,
    mode: DepthMode,
) -> DepthMap {
    flow_to_depth_with(field, cam_ref, cam_tar, mode, &GeomOptions::default())
}

/// [`flow_to_depth`] with explicit cutoffs.
pub fn flow_to_depth_with(
    field: &DisplacementField,
    cam_ref: &CameraModel,
    cam_tar: &CameraModel,
    mode: DepthMode,
    opts: &GeomOptions,
) -> DepthMap {
    let warp = compose_camera_pair(cam_ref, cam_tar);
    DepthMap::from_fn(field.width(), field.height(), mode.variant(), |u, v| {
        let (du, dv) = field.get(u, v)?;
        let (u1, v1) = (u as f64, v as f64);
        let sys = warp.lsm_system(u1, v1, u1 + du, v1 + dv);
        let z = match mode {
            DepthMode::Zu => sys.depth_u(opts.eps_den),
            DepthMode::Zv => sys.depth_v(opts.eps_den),
            DepthMode::Zlsm => sys.depth_lsm(opts.eps_den),
        }?;
        (z > 0.0).then_some(z)
    })
    .expect("field dimensions are validated at construction")
}

/// Parameters for the stereo crop augmentations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentSpec {
    /// Vertical shift of the right view's crop window, in whole pixels.
    pub vertical_jitter_dy: i32,
    /// Clockwise quarter turns applied to the whole sample, 0 to 3.
    pub rotate_quarter_turns: u8,
    /// Seed the spec was drawn from (recorded for reproducibility).
    pub seed: u64,
}

impl AugmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rotate_quarter_turns > 3 {
            return Err(Error::InvalidArgument(format!(
                "quarter turns must be 0..=3, got {}",
                self.rotate_quarter_turns
            )));
        }
        Ok(())
    }

    /// Draws a spec deterministically from a seed: jitter uniform in
    /// `[-max_dy, max_dy]`, turns uniform in `0..=3`.
    pub fn seeded(seed: u64, max_dy: u32) -> Self {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let dy = rng.gen_range(-(max_dy as i32)..=max_dy as i32);
        let turns = rng.gen_range(0..4u8);
        Self {
            vertical_jitter_dy: dy,
            rotate_quarter_turns: turns,
            seed,
        }
    }
}

fn check_sample_dims(
    left: &GrayImage,
    right: &GrayImage,
    flow: &DisplacementField,
) -> Result<()> {
    if left.width() != right.width()
        || left.height() != right.height()
        || left.width() != flow.width()
        || left.height() != flow.height()
    {
        return Err(Error::InvalidArgument(format!(
            "sample dimensions disagree: left {}x{}, right {}x{}, flow {}x{}",
            left.width(),
            left.height(),
            right.width(),
            right.height(),
            flow.width(),
            flow.height()
        )));
    }
    Ok(())
}

/// Shifts the right view's crop window down by `dy` pixels (replicate
/// padding where the window leaves the frame) and compensates the ground
/// truth: `dv' = dv - dy`, `du` unchanged. Applying `dy` then `-dy` restores
/// the original flow.
pub fn augment_vertical_jitter(
    left: &GrayImage,
    right: &GrayImage,
    flow_gt: &DisplacementField,
    dy: i32,
) -> Result<(GrayImage, GrayImage, DisplacementField)> {
    check_sample_dims(left, right, flow_gt)?;
    if dy.unsigned_abs() as usize >= right.height() {
        return Err(Error::InvalidArgument(format!(
            "jitter {dy} exceeds the {}-pixel crop margin",
            right.height()
        )));
    }
    let shifted = GrayImage::from_fn(right.width(), right.height(), |u, v| {
        right.get_clamped(u as i64, v as i64 + dy as i64)
    })?;
    let flow = DisplacementField::from_fn(flow_gt.width(), flow_gt.height(), |u, v| {
        flow_gt.get(u, v).map(|(du, dv)| (du, dv - dy as f64))
    })?;
    Ok((left.clone(), shifted, flow))
}

fn rotate_image_cw(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    // New cell (u', v') came from old (v', h - 1 - u').
    GrayImage::from_fn(h, w, |u, v| img.get(v, h - 1 - u))
        .expect("rotation preserves pixel count")
}

fn rotate_field_cw(field: &DisplacementField) -> DisplacementField {
    let (w, h) = (field.width(), field.height());
    DisplacementField::from_fn(h, w, |u, v| {
        field.get(v, h - 1 - u).map(|(du, dv)| (-dv, du))
    })
    .expect("rotation preserves pixel count")
}

/// Rotates the sample clockwise by `turns` quarter turns. Per turn, the grid
/// index maps `(u, v) -> (H - 1 - v, u)` and each displacement vector maps
/// `(du, dv) -> (-dv, du)`, so horizontal disparity becomes vertical
/// displacement. Magnitudes are preserved and four turns are the identity.
pub fn augment_rotate_quarter(
    left: &GrayImage,
    right: &GrayImage,
    flow_gt: &DisplacementField,
    turns: u8,
) -> Result<(GrayImage, GrayImage, DisplacementField)> {
    check_sample_dims(left, right, flow_gt)?;
    if turns > 3 {
        return Err(Error::InvalidArgument(format!(
            "quarter turns must be 0..=3, got {turns}"
        )));
    }
    let mut l = left.clone();
    let mut r = right.clone();
    let mut f = flow_gt.clone();
    for _ in 0..turns {
        l = rotate_image_cw(&l);
        r = rotate_image_cw(&r);
        f = rotate_field_cw(&f);
    }
    Ok((l, r, f))
}

/// Annotation-only half of [`augment_vertical_jitter`]: compensates the
/// ground truth for a right view shifted down by `dy` without touching
/// images. `dy` must leave some crop margin, bounded by the field height.
pub fn jitter_flow_annotation(flow: &DisplacementField, dy: i32) -> Result<DisplacementField> {
    if dy.unsigned_abs() as usize >= flow.height() {
        return Err(Error::InvalidArgument(format!(
            "jitter {dy} exceeds the {}-pixel crop margin",
            flow.height()
        )));
    }
    DisplacementField::from_fn(flow.width(), flow.height(), |u, v| {
        flow.get(u, v).map(|(du, dv)| (du, dv - dy as f64))
    })
}

/// Annotation-only half of [`augment_rotate_quarter`]: rotates the grid and
/// the displacement vectors clockwise by `turns` quarter turns.
pub fn rotate_flow_annotation(flow: &DisplacementField, turns: u8) -> Result<DisplacementField> {
    if turns > 3 {
        return Err(Error::InvalidArgument(format!(
            "quarter turns must be 0..=3, got {turns}"
        )));
    }
    let mut f = flow.clone();
    for _ in 0..turns {
        f = rotate_field_cw(&f);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    fn cam(t: Vector3<f64>) -> CameraModel {
        let k = Matrix3::new(100.0, 0.0, 0.0, 0.0, 100.0, 0.0, 0.0, 0.0, 1.0);
        CameraModel::new(k, Matrix3::identity(), t).unwrap()
    }

    #[test]
    fn disparity_extraction_rules() {
        let cases = [
            ((-5.0, 0.0), 1.0, Some(5.0)),
            ((-5.0, 2.0), 1.0, None),
            ((3.2, 0.0), 1.0, None),
            ((-0.0, 0.5), 1.0, Some(0.0)),
        ];
        for ((du, dv), v_tol, expect) in cases {
            let field = DisplacementField::filled(2, 2, du, dv).unwrap();
            let disp = flow_to_disparity(&field, v_tol).unwrap();
            assert_eq!(disp.get(0, 0), expect, "case ({du}, {dv})");
        }
        assert!(flow_to_disparity(&DisplacementField::filled(1, 1, 0.0, 0.0).unwrap(), -1.0).is_err());
    }

    #[test]
    fn disparity_round_trip_is_exact() {
        let disp = DisparityMap::from_fn(7, 5, |u, v| {
            if (u * v) % 4 == 3 {
                None
            } else {
                Some(u as f64 * 0.37 + v as f64)
            }
        })
        .unwrap();
        let flow = disparity_to_flow(&disp);
        assert_eq!(flow.get(1, 0), Some((-0.37, 0.0)));
        let back = flow_to_disparity(&flow, 0.0).unwrap();
        assert_eq!(back, disp);
        // Zero disparity embeds as the zero vector.
        let zero = DisparityMap::filled(2, 2, 0.0).unwrap();
        assert_eq!(disparity_to_flow(&zero).get(0, 0), Some((0.0, 0.0)));
    }

    #[test]
    fn identical_cameras_give_zero_flow() {
        let c = cam(Vector3::new(0.2, -0.1, 0.4));
        let depth = DepthMap::from_fn(6, 4, DepthVariant::Source, |u, _| Some(5.0 + u as f64)).unwrap();
        let flow = project_depth_to_flow(&depth, &c, &c);
        for v in 0..4 {
            for u in 0..6 {
                let (du, dv) = flow.get(u, v).unwrap();
                assert!(du.abs() < 1e-12 && dv.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rectified_stereo_flow_and_depth() {
        let c1 = cam(Vector3::zeros());
        let c2 = cam(Vector3::new(-0.5, 0.0, 0.0));
        let depth = DepthMap::from_fn(8, 6, DepthVariant::Source, |_, _| Some(10.0)).unwrap();
        let flow = project_depth_to_flow(&depth, &c1, &c2);
        for v in 0..6 {
            for u in 0..8 {
                let (du, dv) = flow.get(u, v).unwrap();
                assert!((du + 5.0).abs() < 1e-12);
                assert!(dv.abs() < 1e-12);
            }
        }
        let zu = flow_to_depth(&flow, &c1, &c2, DepthMode::Zu);
        let zv = flow_to_depth(&flow, &c1, &c2, DepthMode::Zv);
        let zlsm = flow_to_depth(&flow, &c1, &c2, DepthMode::Zlsm);
        for v in 0..6 {
            for u in 0..8 {
                assert!((zu.get(u, v).unwrap() - 10.0).abs() < 1e-9);
                assert!(zv.get(u, v).is_none(), "vertical equation is degenerate");
                assert!((zlsm.get(u, v).unwrap() - 10.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pure_rotation_pair_has_no_valid_depth() {
        let k = Matrix3::new(90.0, 0.0, 32.0, 0.0, 95.0, 24.0, 0.0, 0.0, 1.0);
        let r2 = nalgebra::Rotation3::from_euler_angles(0.0, 0.1, 0.0);
        let c1 = CameraModel::new(k, Matrix3::identity(), Vector3::zeros()).unwrap();
        let c2 = CameraModel::new(k, *r2.matrix(), Vector3::zeros()).unwrap();
        let depth = DepthMap::from_fn(8, 8, DepthVariant::Source, |_, _| Some(7.0)).unwrap();
        let flow = project_depth_to_flow(&depth, &c1, &c2);
        for mode in [DepthMode::Zu, DepthMode::Zv, DepthMode::Zlsm] {
            assert_eq!(flow_to_depth(&flow, &c1, &c2, mode).valid_count(), 0);
        }
    }

    #[test]
    fn consistent_axes_agree_with_lsm() {
        // Diagonal translation makes both equations informative.
        let c1 = cam(Vector3::zeros());
        let c2 = cam(Vector3::new(-0.3, -0.4, 0.0));
        let depth = DepthMap::from_fn(5, 5, DepthVariant::Source, |_, _| Some(8.0)).unwrap();
        let flow = project_depth_to_flow(&depth, &c1, &c2);
        let zu = flow_to_depth(&flow, &c1, &c2, DepthMode::Zu);
        let zv = flow_to_depth(&flow, &c1, &c2, DepthMode::Zv);
        let zlsm = flow_to_depth(&flow, &c1, &c2, DepthMode::Zlsm);
        for v in 0..5 {
            for u in 0..5 {
                let (a, b, l) = (
                    zu.get(u, v).unwrap(),
                    zv.get(u, v).unwrap(),
                    zlsm.get(u, v).unwrap(),
                );
                assert!((a - b).abs() < 1e-9);
                assert!((l - a).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jitter_adjusts_vertical_component() {
        let left = GrayImage::from_fn(6, 6, |u, v| (u + v) as f32).unwrap();
        let right = GrayImage::from_fn(6, 6, |u, v| (u * v) as f32).unwrap();
        let flow = DisplacementField::filled(6, 6, -2.0, 0.0).unwrap();

        let (_, r0, f0) = augment_vertical_jitter(&left, &right, &flow, 0).unwrap();
        assert_eq!(r0, right);
        assert_eq!(f0, flow);

        let (_, r3, f3) = augment_vertical_jitter(&left, &right, &flow, 3).unwrap();
        assert_eq!(f3.get(2, 2), Some((-2.0, -3.0)));
        assert_eq!(r3.get(1, 0), right.get(1, 3));

        let (_, _, back) = augment_vertical_jitter(&left, &r3, &f3, -3).unwrap();
        assert_eq!(back, flow);

        assert!(augment_vertical_jitter(&left, &right, &flow, 6).is_err());
    }

    #[test]
    fn quarter_rotation_action() {
        let left = GrayImage::from_fn(4, 3, |u, v| (v * 4 + u) as f32).unwrap();
        let right = left.clone();
        let flow = DisplacementField::filled(4, 3, -5.0, 0.0).unwrap();

        let (l0, _, f0) = augment_rotate_quarter(&left, &right, &flow, 0).unwrap();
        assert_eq!(l0, left);
        assert_eq!(f0, flow);

        let (l1, _, f1) = augment_rotate_quarter(&left, &right, &flow, 1).unwrap();
        assert_eq!(l1.width(), 3);
        assert_eq!(l1.height(), 4);
        // Horizontal disparity becomes vertical displacement.
        assert_eq!(f1.get(0, 0), Some((0.0, -5.0)));
        // Old top-left lands at the new top-right corner.
        assert_eq!(l1.get(2, 0), left.get(0, 0));

        // Four single turns compose to the identity.
        let (mut li, mut ri, mut fi) = (left.clone(), right.clone(), flow.clone());
        for _ in 0..4 {
            let out = augment_rotate_quarter(&li, &ri, &fi, 1).unwrap();
            li = out.0;
            ri = out.1;
            fi = out.2;
        }
        assert_eq!(li, left);
        assert_eq!(fi, flow);

        assert!(augment_rotate_quarter(&left, &right, &flow, 4).is_err());
    }

    #[test]
    fn seeded_spec_is_deterministic() {
        let a = AugmentSpec::seeded(99, 8);
        let b = AugmentSpec::seeded(99, 8);
        assert_eq!(a, b);
        assert!(a.vertical_jitter_dy.unsigned_abs() <= 8);
        a.validate().unwrap();
    }
}
