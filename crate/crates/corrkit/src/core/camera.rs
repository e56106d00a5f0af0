//! Pinhole camera model and the two-view pose-warp algebra.
//!
//! A camera is `(K, R, T)` with world-to-camera extrinsics. For a pair of
//! cameras the warp matrices
//!
//! ```text
//! H = K2 R2 R1^{-1} K1^{-1}
//! B = -K2 R2 R1^{-1} T1 + K2 T2
//! ```
//!
//! map a reference pixel with depth `Z` to its homogeneous target projection
//! `s2 [u2 v2 1]^T = H [u1 v1 1]^T Z + B`. Reading that system per row also
//! gives closed-form depth from a known correspondence, which is what
//! [`LsmSystem`] captures.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Default tolerance for rotation orthonormality checks.
pub const ROTATION_TOL: f64 = 1e-9;

/// Pinhole camera: intrinsics `K` plus world-to-camera pose `(R, T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    k: Matrix3<f64>,
    r: Matrix3<f64>,
    t: Vector3<f64>,
}

impl CameraModel {
    /// Validates and stores `(K, R, T)`.
    ///
    /// `K` must be upper triangular with positive focal lengths and a unit
    /// bottom-right entry; `R` must be a rotation (orthonormal, determinant 1)
    /// within [`ROTATION_TOL`].
    pub fn new(k: Matrix3<f64>, r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        Self::with_rotation_tol(k, r, t, ROTATION_TOL)
    }

    /// Like [`CameraModel::new`] but with an explicit orthonormality
    /// tolerance, for inputs parsed from lower-precision sources.
    pub fn with_rotation_tol(
        k: Matrix3<f64>,
        r: Matrix3<f64>,
        t: Vector3<f64>,
        tol: f64,
    ) -> Result<Self> {
        if k.iter().any(|x| !x.is_finite())
            || r.iter().any(|x| !x.is_finite())
            || t.iter().any(|x| !x.is_finite())
        {
            return Err(Error::Construction(
                "camera parameters must be finite".into(),
            ));
        }
        if k[(0, 0)] <= 0.0 || k[(1, 1)] <= 0.0 {
            return Err(Error::Construction(format!(
                "focal lengths must be positive, got fx={}, fy={}",
                k[(0, 0)],
                k[(1, 1)]
            )));
        }
        if k[(1, 0)] != 0.0 || k[(2, 0)] != 0.0 || k[(2, 1)] != 0.0 || k[(2, 2)] != 1.0 {
            return Err(Error::Construction(
                "intrinsic matrix must be upper triangular with K[2][2] = 1".into(),
            ));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > tol {
            return Err(Error::Construction(format!(
                "rotation determinant {det} differs from 1 by more than {tol}"
            )));
        }
        let gram = r.transpose() * r - Matrix3::identity();
        let max_dev = gram.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if max_dev > tol {
            return Err(Error::Construction(format!(
                "rotation is not orthonormal: max |R^T R - I| = {max_dev} > {tol}"
            )));
        }
        Ok(Self { k, r, t })
    }

    /// Convenience constructor from scalar intrinsics.
    pub fn from_intrinsics(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        skew: f64,
        r: Matrix3<f64>,
        t: Vector3<f64>,
    ) -> Result<Self> {
        let k = Matrix3::new(fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0);
        Self::new(k, r, t)
    }

    pub fn k(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn r(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn t(&self) -> &Vector3<f64> {
        &self.t
    }

    pub fn fx(&self) -> f64 {
        self.k[(0, 0)]
    }

    pub fn fy(&self) -> f64 {
        self.k[(1, 1)]
    }

    pub fn cx(&self) -> f64 {
        self.k[(0, 2)]
    }

    pub fn cy(&self) -> f64 {
        self.k[(1, 2)]
    }

    pub fn skew(&self) -> f64 {
        self.k[(0, 1)]
    }

    /// Closed-form inverse of the upper-triangular intrinsic matrix.
    pub fn k_inverse(&self) -> Matrix3<f64> {
        let (fx, fy) = (self.fx(), self.fy());
        let (cx, cy, sk) = (self.cx(), self.cy(), self.skew());
        Matrix3::new(
            1.0 / fx,
            -sk / (fx * fy),
            (sk * cy - cx * fy) / (fx * fy),
            0.0,
            1.0 / fy,
            -cy / fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Projects a world point. `None` when the projective scale is exactly
    /// degenerate (point on the principal plane).
    pub fn project(&self, x_world: &Vector3<f64>) -> Option<ProjectionResult> {
        let x_cam = self.r * x_world + self.t;
        let s2 = x_cam.z;
        if s2.abs() < 1e-300 {
            return None;
        }
        let p = self.k * x_cam;
        Some(ProjectionResult {
            u2: p.x / s2,
            v2: p.y / s2,
            s2,
            in_front: s2 > 0.0,
        })
    }

    /// World point for pixel `(u, v)` at z-depth `z` along this camera's
    /// optical axis (depth is the camera-frame z coordinate, not ray length).
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        let x_cam = self.k_inverse() * Vector3::new(u, v, 1.0) * z;
        self.r.transpose() * (x_cam - self.t)
    }
}

/// Homogeneous target projection of a reference pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionResult {
    pub u2: f64,
    pub v2: f64,
    /// Projective scale; equals the point's z-depth in the target camera.
    pub s2: f64,
    /// `s2 > 0`: the point lies in front of the target camera.
    pub in_front: bool,
}

/// Two-view warp matrices `(H, B)` for a camera pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseWarp {
    h: Matrix3<f64>,
    b: Vector3<f64>,
}

/// Builds the warp `H = K2 R2 R1^{-1} K1^{-1}`,
/// `B = -K2 R2 R1^{-1} T1 + K2 T2` for a reference/target camera pair.
///
/// `R^{-1}` is taken as the transpose; both rotations were validated
/// orthonormal at construction.
pub fn compose_camera_pair(cam_ref: &CameraModel, cam_tar: &CameraModel) -> PoseWarp {
    let m = cam_tar.k() * cam_tar.r() * cam_ref.r().transpose();
    PoseWarp {
        h: m * cam_ref.k_inverse(),
        b: -m * cam_ref.t() + cam_tar.k() * cam_tar.t(),
    }
}

impl PoseWarp {
    pub fn from_parts(h: Matrix3<f64>, b: Vector3<f64>) -> Self {
        Self { h, b }
    }

    pub fn h(&self) -> &Matrix3<f64> {
        &self.h
    }

    pub fn b(&self) -> &Vector3<f64> {
        &self.b
    }

    /// Applies the warp to homogeneous pixel data `x = [u1, v1, 1]^T * z`,
    /// returning the full 3-vector `H x + B` (no dehomogenization).
    pub fn warp_homogeneous(&self, u1: f64, v1: f64, z: f64) -> Vector3<f64> {
        self.h * Vector3::new(u1, v1, 1.0) * z + self.b
    }

    /// Warps a reference pixel with depth `z` into the target view.
    /// `None` when the projective scale is exactly degenerate.
    pub fn warp_pixel(&self, u1: f64, v1: f64, z: f64) -> Option<ProjectionResult> {
        let p = self.warp_homogeneous(u1, v1, z);
        let s2 = p.z;
        if s2.abs() < 1e-300 {
            return None;
        }
        Some(ProjectionResult {
            u2: p.x / s2,
            v2: p.y / s2,
            s2,
            in_front: s2 > 0.0,
        })
    }

    /// Per-pixel depth-from-correspondence system for the match
    /// `(u1, v1) -> (u2, v2)`.
    pub fn lsm_system(&self, u1: f64, v1: f64, u2: f64, v2: f64) -> LsmSystem {
        let h = &self.h;
        let b = &self.b;
        let row3 = h[(2, 0)] * u1 + h[(2, 1)] * v1 + h[(2, 2)];
        LsmSystem {
            a: [
                (h[(0, 0)] * u1 + h[(0, 1)] * v1 + h[(0, 2)]) - row3 * u2,
                (h[(1, 0)] * u1 + h[(1, 1)] * v1 + h[(1, 2)]) - row3 * v2,
            ],
            b: [b.z * u2 - b.x, b.z * v2 - b.y],
        }
    }
}

/// The 2x1 linear system `A z = b` whose solution is the pixel's depth.
///
/// Row 0 comes from the horizontal projection equation, row 1 from the
/// vertical one. Either row alone gives a closed-form depth; the
/// least-squares solution blends both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsmSystem {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl LsmSystem {
    /// Depth from the horizontal equation, `None` when the denominator is
    /// below `eps_den`.
    pub fn depth_u(&self, eps_den: f64) -> Option<f64> {
        (self.a[0].abs() >= eps_den).then(|| self.b[0] / self.a[0])
    }

    /// Depth from the vertical equation.
    pub fn depth_v(&self, eps_den: f64) -> Option<f64> {
        (self.a[1].abs() >= eps_den).then(|| self.b[1] / self.a[1])
    }

    /// Closed-form least-squares depth `(A^T A)^{-1} A^T b`; `A` is 2x1 so
    /// this is `(a1 b1 + a2 b2) / (a1^2 + a2^2)`. `None` when `A^T A` is
    /// below `eps_den`.
    pub fn depth_lsm(&self, eps_den: f64) -> Option<f64> {
        let ata = self.a[0] * self.a[0] + self.a[1] * self.a[1];
        (ata >= eps_den).then(|| (self.a[0] * self.b[0] + self.a[1] * self.b[1]) / ata)
    }

    /// Squared residual `||A z - b||^2` at a candidate depth.
    pub fn residual_sq(&self, z: f64) -> f64 {
        let r0 = self.a[0] * z - self.b[0];
        let r1 = self.a[1] * z - self.b[1];
        r0 * r0 + r1 * r1
    }
}
