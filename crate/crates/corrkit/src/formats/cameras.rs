//! Plain-text camera records.
//!
//! One camera per line, 17 whitespace-separated numbers:
//!
//! ```text
//! fx fy cx cy skew  r00 r01 r02 r10 r11 r12 r20 r21 r22  t0 t1 t2
//! ```
//!
//! Rotation entries are row-major, extrinsics world-to-camera. Empty lines
//! and lines starting with `#` are skipped. Values are emitted with Rust's
//! shortest round-trip float formatting, so parse after emit is exact.

use nalgebra::{Matrix3, Vector3};

use crate::core::{CameraModel, ROTATION_TOL};
use crate::error::{Error, Result};

/// Rotation deviations beyond this are a parse error; smaller deviations are
/// projected onto the nearest rotation.
const READ_ROTATION_TOL: f64 = 1e-6;

fn rotation_deviation(r: &Matrix3<f64>) -> f64 {
    let gram = r.transpose() * r - Matrix3::identity();
    let max_dev = gram.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    max_dev.max((r.determinant() - 1.0).abs())
}

/// Nearest rotation in the Frobenius sense, via SVD.
fn project_to_rotation(r: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = r.svd(true, true);
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant();
    u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum())) * v_t
}

/// Parses camera records from text. Rotations off orthonormality by more
/// than 1e-6 are rejected; smaller drift (from limited-precision sources) is
/// snapped to the nearest rotation.
pub fn read_cameras(text: &str) -> Result<Vec<CameraModel>> {
    let mut cams = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 17 {
            return Err(Error::parse(
                lineno,
                format!("expected 17 fields, got {}", fields.len()),
            ));
        }
        let mut vals = [0.0f64; 17];
        for (i, f) in fields.iter().enumerate() {
            vals[i] = f
                .parse()
                .map_err(|_| Error::parse(lineno, format!("field {} ({f:?}) is not a number", i + 1)))?;
        }
        let [fx, fy, cx, cy, skew] = [vals[0], vals[1], vals[2], vals[3], vals[4]];
        #[rustfmt::skip]
        let mut r = Matrix3::new(
            vals[5], vals[6], vals[7],
            vals[8], vals[9], vals[10],
            vals[11], vals[12], vals[13],
        );
        let t = Vector3::new(vals[14], vals[15], vals[16]);
        let dev = rotation_deviation(&r);
        if dev > READ_ROTATION_TOL {
            return Err(Error::parse(
                lineno,
                format!("rotation deviates from orthonormal by {dev:.3e} (limit {READ_ROTATION_TOL:.0e})"),
            ));
        }
        if dev > ROTATION_TOL {
            r = project_to_rotation(&r);
        }
        let cam = CameraModel::from_intrinsics(fx, fy, cx, cy, skew, r, t)
            .map_err(|e| Error::parse(lineno, e.to_string()))?;
        cams.push(cam);
    }
    Ok(cams)
}

/// Emits camera records, one per line, with exact round-trip formatting.
pub fn write_cameras(cams: &[CameraModel]) -> String {
    let mut out = String::new();
    for cam in cams {
        let r = cam.r();
        let t = cam.t();
        let vals = [
            cam.fx(),
            cam.fy(),
            cam.cx(),
            cam.cy(),
            cam.skew(),
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.x,
            t.y,
            t.z,
        ];
        let line: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}
