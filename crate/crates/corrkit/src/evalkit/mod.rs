//! Evaluation machinery: dense error metrics, forward-backward filtering,
//! sparse match extraction, and epipolar-geometry checks.
//!
//! Every dense metric walks pixels row-major and accumulates sequentially,
//! so results are bit-identical to a straightforward reference loop.

mod cycle;
mod fundamental;
mod matches;
mod metrics;
mod report;

pub use cycle::{cycle_consistency, cycle_consistency_relative, sample_bilinear};
pub use fundamental::{
    estimate_fundamental, maa_epipolar, FundamentalMatrix, RansacParams,
};
pub use matches::extract_matches;
pub use metrics::{bad_tau, d1_f1_all, depth_metrics, epe};
pub use report::{format_kv, format_table, MetricReport, MetricUnit};
