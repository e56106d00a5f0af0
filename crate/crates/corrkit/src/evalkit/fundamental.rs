//! Fundamental-matrix estimation and epipolar accuracy.
//!
//! The estimator is the normalized eight-point algorithm inside RANSAC with
//! Sampson distance as the residual, followed by a least-squares refit on
//! the consensus set. Rank 2 is enforced by zeroing the smallest singular
//! value and matrices are scaled to unit Frobenius norm.

use crate::core::{CameraModel, MatchSet};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{MetricReport, MetricUnit};

/// Rank-2, unit-Frobenius-norm fundamental matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalMatrix {
    m: Matrix3<f64>,
}

fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

impl FundamentalMatrix {
    /// Projects an arbitrary matrix to the valid set: smallest singular
    /// value zeroed, Frobenius norm 1. Rejects matrices that are not
    /// finite or have rank below 2.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::Construction("fundamental matrix must be finite".into()));
        }
        let svd = m.svd(true, true);
        let u = svd.u.expect("svd requested u");
        let v_t = svd.v_t.expect("svd requested v_t");
        let mut s = svd.singular_values;
        if !(s[1] > s[0] * 1e-13) {
            return Err(Error::Construction(
                "matrix is rank deficient, no fundamental matrix".into(),
            ));
        }
        s[2] = 0.0;
        let f = u * Matrix3::from_diagonal(&s) * v_t;
        let norm = f.norm();
        Ok(Self { m: f / norm })
    }

    /// True fundamental matrix of a camera pair, `K2^-T [t]x R K1^-1` with
    /// the relative pose (R, t) from camera 1 to camera 2.
    pub fn from_cameras(cam1: &CameraModel, cam2: &CameraModel) -> Result<Self> {
        let r_rel = cam2.r() * cam1.r().transpose();
        let t_rel = cam2.t() - r_rel * cam1.t();
        if t_rel.norm() < 1e-12 {
            return Err(Error::Construction(
                "cameras share an optical center, fundamental matrix undefined".into(),
            ));
        }
        let e = skew(&t_rel) * r_rel;
        Self::new(cam2.k_inverse().transpose() * e * cam1.k_inverse())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// First-order geometric distance of a correspondence to the epipolar
    /// constraint, in pixels: `|x2' F x1| / sqrt(sum of the four epipolar
    /// line gradient terms)`.
    pub fn sampson_distance(&self, p1: (f64, f64), p2: (f64, f64)) -> f64 {
        let x1 = Vector3::new(p1.0, p1.1, 1.0);
        let x2 = Vector3::new(p2.0, p2.1, 1.0);
        let fx1 = self.m * x1;
        let ftx2 = self.m.transpose() * x2;
        let num = x2.dot(&fx1);
        let den = fx1.x * fx1.x + fx1.y * fx1.y + ftx2.x * ftx2.x + ftx2.y * ftx2.y;
        if den <= 0.0 {
            // Both points sit on the epipoles; the constraint is vacuous.
            return if num == 0.0 { 0.0 } else { f64::INFINITY };
        }
        num.abs() / den.sqrt()
    }
}

/// Hartley normalization: centroid to the origin, mean distance sqrt(2).
fn normalization(pts: &[(f64, f64)]) -> Matrix3<f64> {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
    let (mx, my) = (mx / n, my / n);
    let mean_dist = pts
        .iter()
        .map(|&(x, y)| ((x - mx).powi(2) + (y - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist > 1e-12 { 2.0_f64.sqrt() / mean_dist } else { 1.0 };
    Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0)
}

fn apply_h(t: &Matrix3<f64>, p: (f64, f64)) -> (f64, f64) {
    let q = t * Vector3::new(p.0, p.1, 1.0);
    (q.x / q.z, q.y / q.z)
}

/// Normalized eight-point solve over `n >= 8` correspondences.
fn solve_eight_point(p1: &[(f64, f64)], p2: &[(f64, f64)]) -> Result<FundamentalMatrix> {
    let n = p1.len();
    debug_assert!(n >= 8 && n == p2.len());
    let t1 = normalization(p1);
    let t2 = normalization(p2);
    // Pad to at least 9 rows so the SVD exposes the full right basis.
    let rows = n.max(9);
    let mut a = DMatrix::zeros(rows, 9);
    for i in 0..n {
        let (x, y) = apply_h(&t1, p1[i]);
        let (u, v) = apply_h(&t2, p2[i]);
        a[(i, 0)] = u * x;
        a[(i, 1)] = u * y;
        a[(i, 2)] = u;
        a[(i, 3)] = v * x;
        a[(i, 4)] = v * y;
        a[(i, 5)] = v;
        a[(i, 6)] = x;
        a[(i, 7)] = y;
        a[(i, 8)] = 1.0;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let f = v_t.row(8);
    let fn_hat = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);
    FundamentalMatrix::new(t2.transpose() * fn_hat * t1)
}

/// Rejects samples whose points are coincident or collinear in either
/// view, judged by the eigenvalue ratio of the 2x2 point covariance.
fn spread_ok(pts: &[(f64, f64)]) -> bool {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
    let (mx, my) = (mx / n, my / n);
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (dx, dy) = (x - mx, y - my);
        cxx += dx * dx;
        cxy += dx * dy;
        cyy += dy * dy;
    }
    let tr = cxx + cyy;
    if tr <= 0.0 {
        return false;
    }
    let det = cxx * cyy - cxy * cxy;
    let half = tr / 2.0;
    let disc = (half * half - det).max(0.0).sqrt();
    let lam_min = half - disc;
    let lam_max = half + disc;
    lam_min > 1e-10 * lam_max
}

/// RANSAC settings for [`estimate_fundamental`]. `inlier_tau` is the
/// Sampson distance bound in pixels.
#[derive(Debug, Clone, Copy)]
pub struct RansacParams {
    pub iters: usize,
    pub inlier_tau: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iters: 1000, inlier_tau: 1.0, seed: 0 }
    }
}

/// Estimates a fundamental matrix by RANSAC over minimal eight-point
/// samples, then refits in least squares on the winning consensus set.
///
/// Returns the refit matrix and the per-match inlier mask under it.
/// Deterministic for a fixed seed. Degenerate minimal samples are redrawn
/// a bounded number of times before the iteration is forfeited.
pub fn estimate_fundamental(
    matches: &MatchSet,
    params: &RansacParams,
) -> Result<(FundamentalMatrix, Vec<bool>)> {
    let n = matches.len();
    if n < 8 {
        return Err(Error::Estimation(format!("need at least 8 matches, got {n}")));
    }
    if params.iters == 0 {
        return Err(Error::InvalidArgument("ransac needs at least one iteration".into()));
    }
    if !(params.inlier_tau > 0.0) || !params.inlier_tau.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "inlier threshold {} must be positive and finite",
            params.inlier_tau
        )));
    }
    let p1: Vec<(f64, f64)> = matches.iter().map(|m| (m.u1, m.v1)).collect();
    let p2: Vec<(f64, f64)> = matches.iter().map(|m| (m.u2, m.v2)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut best: Option<(usize, f64, FundamentalMatrix)> = None;
    for _ in 0..params.iters {
        let mut drawn = None;
        for _ in 0..16 {
            let idx = rand::seq::index::sample(&mut rng, n, 8);
            let s1: Vec<(f64, f64)> = idx.iter().map(|i| p1[i]).collect();
            let s2: Vec<(f64, f64)> = idx.iter().map(|i| p2[i]).collect();
            if spread_ok(&s1) && spread_ok(&s2) {
                drawn = Some((s1, s2));
                break;
            }
        }
        let Some((s1, s2)) = drawn else { continue };
        let Ok(f) = solve_eight_point(&s1, &s2) else { continue };
        let mut count = 0usize;
        let mut resid = 0.0;
        for i in 0..n {
            let d = f.sampson_distance(p1[i], p2[i]);
            if d < params.inlier_tau {
                count += 1;
                resid += d;
            }
        }
        let improves = match &best {
            None => count >= 8,
            Some((bc, br, _)) => count > *bc || (count == *bc && resid < *br),
        };
        if improves {
            best = Some((count, resid, f));
        }
    }
    let Some((_, _, rough)) = best else {
        return Err(Error::Estimation("no consensus reached within the iteration budget".into()));
    };

    let inlier_idx: Vec<usize> = (0..n)
        .filter(|&i| rough.sampson_distance(p1[i], p2[i]) < params.inlier_tau)
        .collect();
    let final_f = if inlier_idx.len() >= 8 {
        let s1: Vec<(f64, f64)> = inlier_idx.iter().map(|&i| p1[i]).collect();
        let s2: Vec<(f64, f64)> = inlier_idx.iter().map(|&i| p2[i]).collect();
        solve_eight_point(&s1, &s2).unwrap_or(rough)
    } else {
        rough
    };
    let mask: Vec<bool> = (0..n)
        .map(|i| final_f.sampson_distance(p1[i], p2[i]) < params.inlier_tau)
        .collect();
    Ok((final_f, mask))
}

/// Mean average accuracy: for each integer threshold `t` in
/// `1..=max_threshold_px`, the fraction of matches with Sampson distance
/// below `t` px is computed; the report value is the mean of those
/// fractions as a percentage.
pub fn maa_epipolar(
    gt_matches: &MatchSet,
    f: &FundamentalMatrix,
    max_threshold_px: usize,
) -> Result<MetricReport> {
    if gt_matches.is_empty() {
        return Err(Error::Evaluation("mean average accuracy over an empty match set".into()));
    }
    if max_threshold_px == 0 {
        return Err(Error::InvalidArgument("threshold must be at least 1 px".into()));
    }
    let n = gt_matches.len();
    let dists: Vec<f64> = gt_matches
        .iter()
        .map(|m| f.sampson_distance((m.u1, m.v1), (m.u2, m.v2)))
        .collect();
    let mut acc = 0.0;
    for t in 1..=max_threshold_px {
        let hits = dists.iter().filter(|&&d| d < t as f64).count();
        acc += hits as f64 / n as f64;
    }
    MetricReport::new(
        format!("maa@{max_threshold_px}"),
        100.0 * acc / max_threshold_px as f64,
        MetricUnit::Percent,
        n,
    )
}
