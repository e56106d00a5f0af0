//! Dense feature grids at named pyramid scales.

use crate::error::{Error, Result};

/// Pyramid level a feature grid lives at, as a fraction of image resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyramidScale {
    Full,
    Half,
    Quarter,
    Eighth,
    Sixteenth,
}

impl PyramidScale {
    /// The divisor relating image size to grid size at this scale.
    pub fn denominator(self) -> usize {
        match self {
            PyramidScale::Full => 1,
            PyramidScale::Half => 2,
            PyramidScale::Quarter => 4,
            PyramidScale::Eighth => 8,
            PyramidScale::Sixteenth => 16,
        }
    }

    /// Grid extent for an image extent, requiring exact divisibility.
    pub fn grid_extent(self, image_extent: usize) -> Result<usize> {
        let d = self.denominator();
        if image_extent == 0 || image_extent % d != 0 {
            return Err(Error::InvalidArgument(format!(
                "image extent {image_extent} is not a positive multiple of {d}"
            )));
        }
        Ok(image_extent / d)
    }
}

/// `channels`-vector per cell, channels-last row-major storage
/// (`(v * width + u) * channels + c`). All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    width: usize,
    height: usize,
    channels: usize,
    scale: PyramidScale,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        scale: PyramidScale,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::Construction(format!(
                "feature grid must be at least 1x1x1, got {width}x{height}x{channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Construction(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::Construction(format!(
                "feature grid contains non-finite entry {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            scale,
            data,
        })
    }

    pub fn constant(
        width: usize,
        height: usize,
        channels: usize,
        scale: PyramidScale,
        value: f64,
    ) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            scale,
            vec![value; width * height * channels],
        )
    }

    /// Builds cell by cell; the closure fills the `channels`-length slice
    /// for each `(u, v)`.
    pub fn from_fn<F>(
        width: usize,
        height: usize,
        channels: usize,
        scale: PyramidScale,
        mut f: F,
    ) -> Result<Self>
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let mut data = vec![0.0; width * height * channels];
        for v in 0..height {
            for u in 0..width {
                let i = (v * width + u) * channels;
                f(u, v, &mut data[i..i + channels]);
            }
        }
        Self::new(width, height, channels, scale, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn scale(&self) -> PyramidScale {
        self.scale
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The feature vector at cell `(u, v)`.
    pub fn cell(&self, u: usize, v: usize) -> &[f64] {
        debug_assert!(u < self.width && v < self.height);
        let i = (v * self.width + u) * self.channels;
        &self.data[i..i + self.channels]
    }

    /// Same grid shape and channel count (scale tag not compared).
    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.channels == other.channels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_extent_requires_divisibility() {
        assert_eq!(PyramidScale::Eighth.grid_extent(64).unwrap(), 8);
        assert!(PyramidScale::Eighth.grid_extent(60).is_err());
        assert!(PyramidScale::Half.grid_extent(0).is_err());
    }

    #[test]
    fn cell_indexing_is_channels_last() {
        let fm = FeatureMap::from_fn(2, 2, 3, PyramidScale::Full, |u, v, out| {
            for (c, x) in out.iter_mut().enumerate() {
                *x = (v * 100 + u * 10 + c) as f64;
            }
        })
        .unwrap();
        assert_eq!(fm.cell(1, 1), &[110.0, 111.0, 112.0]);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(FeatureMap::new(1, 1, 1, PyramidScale::Full, vec![f64::INFINITY]).is_err());
    }
}
