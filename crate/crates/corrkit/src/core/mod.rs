//! Shared domain types: dense field containers, pinhole cameras, and the
//! pose-warp algebra used by every conversion.
//!
//! Conventions fixed here and relied on everywhere else:
//! - Pixel coordinates are `(u, v) = (column, row)`, origin at the top-left
//!   pixel center, `u` growing rightward and `v` downward.
//! - Extrinsics are world-to-camera: `x_cam = R * x_world + T`.
//! - Invalid pixels store NaN in the float payload *and* `false` in the mask;
//!   the mask is authoritative. Formats that use other sentinels translate at
//!   the boundary.
//! - All types are immutable after construction and safe to share across
//!   threads.

mod camera;
mod fields;
mod matchset;

pub use camera::{
    compose_camera_pair, CameraModel, LsmSystem, PoseWarp, ProjectionResult, ROTATION_TOL,
};
pub use fields::{ConfidenceMap, DepthMap, DepthVariant, DisparityMap, DisplacementField};
pub use matchset::{Match, MatchSet};
