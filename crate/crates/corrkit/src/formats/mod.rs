//! Readers and writers for the on-disk annotation formats.
//!
//! Four containers are supported:
//! - `.flo`: the Middlebury optical-flow container ([`read_flo`],
//!   [`write_flo`]).
//! - PFM: 1- or 3-channel float images, used for disparity
//!   ([`read_pfm`], [`write_pfm`] and the disparity adapters).
//! - KITTI-style 16-bit PNG annotations for disparity and flow.
//! - A plain-text camera format, one record per line ([`read_cameras`],
//!   [`write_cameras`]).
//!
//! All decoders return structured errors with byte offsets (binary) or line
//! numbers (text) instead of panicking, whatever the input.

mod cameras;
mod flo;
mod kitti;
mod pfm;

pub use cameras::{read_cameras, write_cameras};
pub use flo::{read_flo, write_flo, FLO_MAGIC};
pub use kitti::{read_kitti_disp, read_kitti_flow, write_kitti_disp, write_kitti_flow};
pub use pfm::{disparity_to_pfm, pfm_to_disparity, read_pfm, write_pfm, PfmImage};
