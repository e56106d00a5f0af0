//! Sparse correspondences between a reference and a target image.

use crate::error::{Error, Result};

/// One sparse correspondence with a confidence weight in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub u1: f64,
    pub v1: f64,
    pub u2: f64,
    pub v2: f64,
    pub confidence: f64,
}

/// A validated list of matches between two images of known size.
///
/// Reference coordinates must lie inside the reference image and target
/// coordinates inside the target image (half-open `[0, width) x [0, height)`).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    ref_dims: (usize, usize),
    tar_dims: (usize, usize),
    matches: Vec<Match>,
}

impl MatchSet {
    /// Validates every match against the image bounds. `ref_dims` and
    /// `tar_dims` are `(width, height)`.
    pub fn new(
        ref_dims: (usize, usize),
        tar_dims: (usize, usize),
        matches: Vec<Match>,
    ) -> Result<Self> {
        if ref_dims.0 == 0 || ref_dims.1 == 0 || tar_dims.0 == 0 || tar_dims.1 == 0 {
            return Err(Error::Construction(
                "match set image dimensions must be nonzero".into(),
            ));
        }
        for (i, m) in matches.iter().enumerate() {
            let vals = [m.u1, m.v1, m.u2, m.v2, m.confidence];
            if vals.iter().any(|x| !x.is_finite()) {
                return Err(Error::Construction(format!(
                    "match {i} contains a non-finite value"
                )));
            }
            if !(0.0..=1.0).contains(&m.confidence) {
                return Err(Error::Construction(format!(
                    "match {i} confidence {} outside [0, 1]",
                    m.confidence
                )));
            }
            if m.u1 < 0.0 || m.u1 >= ref_dims.0 as f64 || m.v1 < 0.0 || m.v1 >= ref_dims.1 as f64 {
                return Err(Error::Construction(format!(
                    "match {i} reference point ({}, {}) outside {}x{}",
                    m.u1, m.v1, ref_dims.0, ref_dims.1
                )));
            }
            if m.u2 < 0.0 || m.u2 >= tar_dims.0 as f64 || m.v2 < 0.0 || m.v2 >= tar_dims.1 as f64 {
                return Err(Error::Construction(format!(
                    "match {i} target point ({}, {}) outside {}x{}",
                    m.u2, m.v2, tar_dims.0, tar_dims.1
                )));
            }
        }
        Ok(Self {
            ref_dims,
            tar_dims,
            matches,
        })
    }

    pub fn ref_dims(&self) -> (usize, usize) {
        self.ref_dims
    }

    pub fn tar_dims(&self) -> (usize, usize) {
        self.tar_dims
    }

    pub fn matches(&self) -> &[Match] {
        &self.matches
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Match> {
        self.matches.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(u1: f64, v1: f64, u2: f64, v2: f64) -> Match {
        Match {
            u1,
            v1,
            u2,
            v2,
            confidence: 1.0,
        }
    }

    #[test]
    fn accepts_in_bounds_matches() {
        let set = MatchSet::new((10, 8), (12, 8), vec![m(0.0, 0.0, 11.5, 7.5)]).unwrap();
        assert_eq!(set.len(), 1);
        assert!(!set.is_empty());
    }

    #[test]
    fn rejects_out_of_bounds_target() {
        assert!(MatchSet::new((10, 8), (12, 8), vec![m(0.0, 0.0, 12.0, 0.0)]).is_err());
    }

    #[test]
    fn rejects_bad_confidence() {
        let mut bad = m(1.0, 1.0, 1.0, 1.0);
        bad.confidence = 1.5;
        assert!(MatchSet::new((10, 8), (10, 8), vec![bad]).is_err());
    }

    #[test]
    fn empty_set_is_valid() {
        let set = MatchSet::new((4, 4), (4, 4), vec![]).unwrap();
        assert!(set.is_empty());
    }
}
