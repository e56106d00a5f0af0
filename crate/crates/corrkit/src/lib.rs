//! corrkit is a CPU-first toolkit for dense correspondence work.
//!
//! Everything is organized around a single representation: the per-pixel 2D
//! displacement field. Disparity maps, two-view depth, and sparse feature
//! matches are all derived from (or converted into) displacement fields by
//! parameter-free calculations, so one set of tools covers stereo, flow, and
//! feature-matching style data.
//!
//! The main areas:
//! - [`core`]: field types (displacement, disparity, depth, confidence),
//!   pinhole cameras, and the pose-warp algebra shared by every conversion.
//! - [`formats`]: bit-exact readers/writers for `.flo`, PFM, KITTI-style
//!   16-bit PNG annotations, and a plain-text camera format.
//! - [`geometry`]: lossless conversions between displacement, disparity, and
//!   depth, plus the stereo training augmentations (vertical jitter, quarter
//!   rotations).
//! - [`matching`]: census descriptors, cosine score volumes over displacement
//!   proposals, argmax regression, and trilinear volume upsampling.
//! - [`featxform`]: deterministic forward passes of the guided attention
//!   upsampler and the multi-scale patch embedding, with seedable parameters.
//! - [`objective`]: patch-frequency ground-truth distributions and the
//!   pixel-wise InfoNCE loss over score volumes, with analytic gradients.
//! - [`evalkit`]: flow/disparity/depth metrics, forward-backward cycle
//!   filtering, match extraction, and RANSAC fundamental-matrix estimation.
//! - [`synth`]: seeded synthetic scenes (cameras, depth, stereograms) used by
//!   the test suites and handy for demos.
//!
//! The companion `corrkit-cli` crate exposes the batch frontend.

pub mod core;
pub mod error;
pub mod evalkit;
pub mod featxform;
pub mod formats;
pub mod geometry;
pub mod matching;
pub mod objective;
pub mod synth;

pub use error::{Error, Result};
