//! Dense per-pixel field containers.
//!
//! Each container pairs float payloads with a boolean validity mask. The mask
//! is the source of truth; invalid pixels carry NaN so that accidental use of
//! masked-out data poisons results instead of silently passing.

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<usize> {
    if width == 0 || height == 0 {
        return Err(Error::Construction(format!(
            "field dimensions must be at least 1x1, got {width}x{height}"
        )));
    }
    width
        .checked_mul(height)
        .ok_or_else(|| Error::Construction("field dimensions overflow".into()))
}

/// Per-pixel 2D displacement `(du, dv) = (u2 - u1, v2 - v1)` with a validity
/// mask. The target coordinate `(u1 + du, v1 + dv)` may fall outside the
/// image; out-of-view is representable, not an error.
///
/// Equality compares shape, mask, and the payload at valid pixels only;
/// the NaN fill behind invalid pixels never participates.
#[derive(Debug, Clone)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    du: Vec<f64>,
    dv: Vec<f64>,
    valid: Vec<bool>,
}

impl DisplacementField {
    /// Constant-filled field with an all-valid mask.
    pub fn filled(width: usize, height: usize, du: f64, dv: f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        if !du.is_finite() || !dv.is_finite() {
            return Err(Error::Construction(format!(
                "constant fill must be finite, got ({du}, {dv})"
            )));
        }
        Ok(Self {
            width,
            height,
            du: vec![du; n],
            dv: vec![dv; n],
            valid: vec![true; n],
        })
    }

    /// All-invalid field (NaN payload, all-false mask).
    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        let n = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            du: vec![f64::NAN; n],
            dv: vec![f64::NAN; n],
            valid: vec![false; n],
        })
    }

    /// Build from raw row-major buffers. Rejects length mismatches and
    /// non-finite values at valid pixels.
    pub fn from_parts(
        width: usize,
        height: usize,
        du: Vec<f64>,
        dv: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        let n = check_dims(width, height)?;
        if du.len() != n || dv.len() != n || valid.len() != n {
            return Err(Error::Construction(format!(
                "buffer lengths ({}, {}, {}) do not match {width}x{height}",
                du.len(),
                dv.len(),
                valid.len()
            )));
        }
        for i in 0..n {
            if valid[i] && (!du[i].is_finite() || !dv[i].is_finite()) {
                return Err(Error::Construction(format!(
                    "non-finite displacement ({}, {}) at valid pixel ({}, {})",
                    du[i],
                    dv[i],
                    i % width,
                    i / width
                )));
            }
        }
        Ok(Self {
            width,
            height,
            du,
            dv,
            valid,
        })
    }

    /// Build per pixel from a closure; `None` marks the pixel invalid.
    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Option<(f64, f64)>,
    {
        let n = check_dims(width, height)?;
        let mut du = Vec::with_capacity(n);
        let mut dv = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for v in 0..height {
            for u in 0..width {
                match f(u, v) {
                    Some((x, y)) => {
                        du.push(x);
                        dv.push(y);
                        valid.push(true);
                    }
                    None => {
                        du.push(f64::NAN);
                        dv.push(f64::NAN);
                        valid.push(false);
                    }
                }
            }
        }
        Self::from_parts(width, height, du, dv, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        v * self.width + u
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.idx(u, v)]
    }

    /// Displacement at `(u, v)`, or `None` for invalid pixels.
    pub fn get(&self, u: usize, v: usize) -> Option<(f64, f64)> {
        let i = self.idx(u, v);
        self.valid[i].then(|| (self.du[i], self.dv[i]))
    }

    pub fn du(&self) -> &[f64] {
        &self.du
    }

    pub fn dv(&self) -> &[f64] {
        &self.dv
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_ratio(&self) -> f64 {
        self.valid_count() as f64 / (self.width * self.height) as f64
    }
}

impl PartialEq for DisplacementField {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.valid == other.valid
            && (0..self.valid.len()).all(|i| {
                !self.valid[i] || (self.du[i] == other.du[i] && self.dv[i] == other.dv[i])
            })
    }
}

/// Per-pixel disparity in pixels. Valid entries are finite and non-negative.
/// Equality follows the same mask-aware rule as [`DisplacementField`].
#[derive(Debug, Clone)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    d: Vec<f64>,
    valid: Vec<bool>,
}

impl DisparityMap {
    pub fn filled(width: usize, height: usize, d: f64) -> Result<Self> {
        let n = check_dims(width, height)?;
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Construction(format!(
                "constant disparity must be finite and >= 0, got {d}"
            )));
        }
        Ok(Self {
            width,
            height,
            d: vec![d; n],
            valid: vec![true; n],
        })
    }

    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        let n = check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            d: vec![f64::NAN; n],
            valid: vec![false; n],
        })
    }

    pub fn from_parts(width: usize, height: usize, d: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        let n = check_dims(width, height)?;
        if d.len() != n || valid.len() != n {
            return Err(Error::Construction(format!(
                "buffer lengths ({}, {}) do not match {width}x{height}",
                d.len(),
                valid.len()
            )));
        }
        for i in 0..n {
            if valid[i] && (!d[i].is_finite() || d[i] < 0.0) {
                return Err(Error::Construction(format!(
                    "disparity {} at valid pixel ({}, {}) is not finite and >= 0",
                    d[i],
                    i % width,
                    i / width
                )));
            }
        }
        Ok(Self {
            width,
            height,
            d,
            valid,
        })
    }

    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Option<f64>,
    {
        let n = check_dims(width, height)?;
        let mut d = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for v in 0..height {
            for u in 0..width {
                match f(u, v) {
                    Some(x) => {
                        d.push(x);
                        valid.push(true);
                    }
                    None => {
                        d.push(f64::NAN);
                        valid.push(false);
                    }
                }
            }
        }
        Self::from_parts(width, height, d, valid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        v * self.width + u
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.idx(u, v)]
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = self.idx(u, v);
        self.valid[i].then(|| self.d[i])
    }

    pub fn d(&self) -> &[f64] {
        &self.d
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_ratio(&self) -> f64 {
        self.valid_count() as f64 / (self.width * self.height) as f64
    }
}

impl PartialEq for DisparityMap {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.valid == other.valid
            && (0..self.valid.len()).all(|i| !self.valid[i] || self.d[i] == other.d[i])
    }
}

/// Which formula produced a depth map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthVariant {
    /// Solved from the horizontal projection equation.
    Zu,
    /// Solved from the vertical projection equation.
    Zv,
    /// Per-pixel least-squares over both equations.
    Zlsm,
    /// Loaded or generated, not derived from displacement.
    Source,
}

/// Per-pixel depth in scene units. Valid entries are finite and positive.
/// Equality follows the same mask-aware rule as [`DisplacementField`].
#[derive(Debug, Clone)]
pub struct DepthMap {
    width: usize,
    height: usize,
    z: Vec<f64>,
    valid: Vec<bool>,
    variant: DepthVariant,
}

impl PartialEq for DepthMap {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.variant == other.variant
            && self.valid == other.valid
            && (0..self.valid.len()).all(|i| !self.valid[i] || self.z[i] == other.z[i])
    }
}

impl DepthMap {
    pub fn from_parts(
        width: usize,
        height: usize,
        z: Vec<f64>,
        valid: Vec<bool>,
        variant: DepthVariant,
    ) -> Result<Self> {
        let n = check_dims(width, height)?;
        if z.len() != n || valid.len() != n {
            return Err(Error::Construction(format!(
                "buffer lengths ({}, {}) do not match {width}x{height}",
                z.len(),
                valid.len()
            )));
        }
        for i in 0..n {
            if valid[i] && (!z[i].is_finite() || z[i] <= 0.0) {
                return Err(Error::Construction(format!(
                    "depth {} at valid pixel ({}, {}) is not finite and > 0",
                    z[i],
                    i % width,
                    i / width
                )));
            }
        }
        Ok(Self {
            width,
            height,
            z,
            valid,
            variant,
        })
    }

    pub fn from_fn<F>(width: usize, height: usize, variant: DepthVariant, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Option<f64>,
    {
        let n = check_dims(width, height)?;
        let mut z = Vec::with_capacity(n);
        let mut valid = Vec::with_capacity(n);
        for v in 0..height {
            for u in 0..width {
                match f(u, v) {
                    Some(x) => {
                        z.push(x);
                        valid.push(true);
                    }
                    None => {
                        z.push(f64::NAN);
                        valid.push(false);
                    }
                }
            }
        }
        Self::from_parts(width, height, z, valid, variant)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn variant(&self) -> DepthVariant {
        self.variant
    }

    fn idx(&self, u: usize, v: usize) -> usize {
        debug_assert!(u < self.width && v < self.height);
        v * self.width + u
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.valid[self.idx(u, v)]
    }

    pub fn get(&self, u: usize, v: usize) -> Option<f64> {
        let i = self.idx(u, v);
        self.valid[i].then(|| self.z[i])
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_ratio(&self) -> f64 {
        self.valid_count() as f64 / (self.width * self.height) as f64
    }
}

/// Per-pixel confidence in `[0, 1]`. Binary in the cycle-consistency case.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: usize,
    height: usize,
    c: Vec<f64>,
}

impl ConfidenceMap {
    pub fn from_parts(width: usize, height: usize, c: Vec<f64>) -> Result<Self> {
        let n = check_dims(width, height)?;
        if c.len() != n {
            return Err(Error::Construction(format!(
                "buffer length {} does not match {width}x{height}",
                c.len()
            )));
        }
        for (i, &x) in c.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Construction(format!(
                    "confidence {} at pixel ({}, {}) is outside [0, 1]",
                    x,
                    i % width,
                    i / width
                )));
            }
        }
        Ok(Self { width, height, c })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        debug_assert!(u < self.width && v < self.height);
        self.c[v * self.width + u]
    }

    pub fn values(&self) -> &[f64] {
        &self.c
    }

    /// Pixels with confidence strictly above zero.
    pub fn confident_count(&self) -> usize {
        self.c.iter().filter(|&&x| x > 0.0).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fill_is_all_valid() {
        let f = DisplacementField::filled(4, 3, 0.0, 0.0).unwrap();
        assert_eq!(f.valid_count(), 12);
        assert_eq!(f.get(3, 2), Some((0.0, 0.0)));
    }

    #[test]
    fn sentinel_fill_is_all_invalid() {
        let f = DisplacementField::invalid(2, 2).unwrap();
        assert_eq!(f.valid_count(), 0);
        assert!(f.get(1, 1).is_none());
        assert!(f.du()[0].is_nan());
    }

    #[test]
    fn single_pixel_constant() {
        let f = DisplacementField::filled(1, 1, -5.0, 2.0).unwrap();
        assert_eq!(f.get(0, 0), Some((-5.0, 2.0)));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(DisplacementField::filled(0, 3, 0.0, 0.0).is_err());
        assert!(DisparityMap::invalid(3, 0).is_err());
    }

    #[test]
    fn nan_at_valid_pixel_rejected() {
        let err = DisplacementField::from_parts(
            1,
            1,
            vec![f64::NAN],
            vec![0.0],
            vec![true],
        );
        assert!(err.is_err());
        // NaN at an invalid pixel is the expected sentinel.
        let ok =
            DisplacementField::from_parts(1, 1, vec![f64::NAN], vec![f64::NAN], vec![false]);
        assert!(ok.is_ok());
    }

    #[test]
    fn disparity_sign_enforced() {
        assert!(DisparityMap::from_parts(1, 1, vec![-0.5], vec![true]).is_err());
        assert!(DisparityMap::from_parts(1, 1, vec![-0.5], vec![false]).is_ok());
    }

    #[test]
    fn depth_positivity_enforced() {
        assert!(DepthMap::from_parts(1, 1, vec![0.0], vec![true], DepthVariant::Source).is_err());
        assert!(DepthMap::from_parts(1, 1, vec![2.0], vec![true], DepthVariant::Source).is_ok());
    }

    #[test]
    fn confidence_range_enforced() {
        assert!(ConfidenceMap::from_parts(1, 2, vec![0.0, 1.0]).is_ok());
        assert!(ConfidenceMap::from_parts(1, 2, vec![0.0, 1.5]).is_err());
        assert!(ConfidenceMap::from_parts(1, 2, vec![f64::NAN, 0.0]).is_err());
    }
}
