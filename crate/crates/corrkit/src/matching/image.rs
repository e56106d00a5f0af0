//! Minimal grayscale raster used as matcher input.

use crate::error::{Error, Result};

/// Single-channel float image, row-major. Intensities are typically in
/// `[0, 1]` but any finite values are accepted.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Construction(format!(
                "image dimensions must be at least 1x1, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Construction(format!(
                "pixel count {} does not match {width}x{height}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::Construction(format!(
                "image contains non-finite intensity {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn<F>(width: usize, height: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f32,
    {
        let mut data = Vec::with_capacity(width * height);
        for v in 0..height {
            for u in 0..width {
                data.push(f(u, v));
            }
        }
        Self::new(width, height, data)
    }

    /// Grayscale (luma) conversion of any decoded raster, intensities scaled
    /// to `[0, 1]`.
    pub fn from_dynamic(img: &::image::DynamicImage) -> Result<Self> {
        let luma = img.to_luma32f();
        Self::new(
            luma.width() as usize,
            luma.height() as usize,
            luma.into_raw(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        debug_assert!(u < self.width && v < self.height);
        self.data[v * self.width + u]
    }

    /// Reads with replicate borders: out-of-range indices clamp to the edge.
    pub fn get_clamped(&self, u: i64, v: i64) -> f32 {
        let uc = u.clamp(0, self.width as i64 - 1) as usize;
        let vc = v.clamp(0, self.height as i64 - 1) as usize;
        self.data[vc * self.width + uc]
    }
}
