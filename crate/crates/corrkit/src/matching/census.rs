//! Census transform descriptors.

use super::{FeatureMap, GrayImage, PyramidScale};
use crate::error::{Error, Result};

/// Per-pixel census descriptor: each neighbor in a `window x window` patch
/// (replicate borders, center excluded) is compared against the center and
/// mapped to +1 when `neighbor >= center`, else -1. Channel order is
/// row-major over the window. Ties map to +1, so a constant image yields
/// all-ones descriptors.
pub fn census_descriptor(image: &GrayImage, window: usize) -> Result<FeatureMap> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "census window must be odd and >= 3, got {window}"
        )));
    }
    let r = (window / 2) as i64;
    let channels = window * window - 1;
    FeatureMap::from_fn(
        image.width(),
        image.height(),
        channels,
        PyramidScale::Full,
        |u, v, out| {
            let center = image.get(u, v);
            let mut c = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = image.get_clamped(u as i64 + dx, v as i64 + dy);
                    out[c] = if n >= center { 1.0 } else { -1.0 };
                    c += 1;
                }
            }
        },
    )
}
