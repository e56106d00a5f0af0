//! Deterministic descriptor matching over score volumes.
//!
//! The pipeline: extract a per-pixel descriptor ([`census_descriptor`]),
//! score every displacement proposal by cosine similarity
//! ([`cosine_score_volume`]), then read the best proposal per pixel
//! ([`argmax_regress`], [`argmax_disparity`]). Volumes computed at a coarse
//! scale can be lifted to full resolution with
//! [`upsample_volume_trilinear`]. No trainable weights are involved, so
//! results are exactly reproducible and serve as oracles for the loss code.

mod census;
mod features;
mod image;
mod volume;

pub use census::census_descriptor;
pub use features::{FeatureMap, PyramidScale};
pub use image::GrayImage;
pub use volume::{
    argmax_disparity, argmax_regress, cosine_score_volume, fuse_volumes,
    upsample_volume_trilinear, ProposalKind, ProposalSet, ScoreVolume, OUT_OF_BOUNDS_SCORE,
};
