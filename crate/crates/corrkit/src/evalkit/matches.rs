//! Sparse match extraction from dense flow plus confidence.

use crate::core::{ConfidenceMap, DisplacementField, Match, MatchSet};
use crate::error::{Error, Result};

/// One match per confident pixel on a stride grid.
///
/// Pixels are visited at (u, v) with both coordinates multiples of
/// `stride`; a match is kept when the pixel is confident (> 0), the flow is
/// valid, and the landing point is inside the target image, taken to be the
/// same size as the flow grid. Confidence is copied through.
pub fn extract_matches(
    flow: &DisplacementField,
    conf: &ConfidenceMap,
    stride: usize,
) -> Result<MatchSet> {
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if (flow.width(), flow.height()) != (conf.width(), conf.height()) {
        return Err(Error::InvalidArgument(format!(
            "flow {}x{} and confidence {}x{} differ in size",
            flow.width(),
            flow.height(),
            conf.width(),
            conf.height()
        )));
    }
    let (w, h) = (flow.width(), flow.height());
    let mut matches = Vec::new();
    for v in (0..h).step_by(stride) {
        for u in (0..w).step_by(stride) {
            let c = conf.get(u, v);
            if c <= 0.0 {
                continue;
            }
            let Some((du, dv)) = flow.get(u, v) else { continue };
            let u2 = u as f64 + du;
            let v2 = v as f64 + dv;
            if u2 < 0.0 || u2 >= w as f64 || v2 < 0.0 || v2 >= h as f64 {
                continue;
            }
            matches.push(Match { u1: u as f64, v1: v as f64, u2, v2, confidence: c });
        }
    }
    MatchSet::new((w, h), (w, h), matches)
}
