//! Multiscale patch embedding: fuses a four-level feature pyramid into a
//! single map on the 1/8 grid.
//!
//! Each 1/8 cell gathers a 4x4 patch from the 1/2 level, a 2x2 patch from
//! the 1/4 level, its own 1/8 cell, and the covering 1/16 cell. Each gather
//! is projected to a common dimension, the four projections are concatenated
//! and pushed through a two-layer MLP with ReLU.

use crate::error::{Error, Result};
use crate::matching::{FeatureMap, PyramidScale};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::LinearMap;

/// Four feature maps tagged 1/2, 1/4, 1/8, 1/16, covering the same image.
#[derive(Debug, Clone)]
pub struct FeaturePyramid {
    half: FeatureMap,
    quarter: FeatureMap,
    eighth: FeatureMap,
    sixteenth: FeatureMap,
}

impl FeaturePyramid {
    /// Validates scale tags and grid consistency. The 1/8 grid is the
    /// reference: half must be 4x its extent, quarter 2x, sixteenth 1/2
    /// (so the 1/8 extent must be even).
    pub fn new(
        half: FeatureMap,
        quarter: FeatureMap,
        eighth: FeatureMap,
        sixteenth: FeatureMap,
    ) -> Result<Self> {
        let tags = [
            (half.scale(), PyramidScale::Half, "half"),
            (quarter.scale(), PyramidScale::Quarter, "quarter"),
            (eighth.scale(), PyramidScale::Eighth, "eighth"),
            (sixteenth.scale(), PyramidScale::Sixteenth, "sixteenth"),
        ];
        for (got, want, name) in tags {
            if got != want {
                return Err(Error::InvalidArgument(format!(
                    "{name} level tagged {got:?}, expected {want:?}"
                )));
            }
        }
        let (ew, eh) = (eighth.width(), eighth.height());
        let shapes = [
            (half.width(), half.height(), 4 * ew, 4 * eh, "half"),
            (quarter.width(), quarter.height(), 2 * ew, 2 * eh, "quarter"),
        ];
        for (w, h, want_w, want_h, name) in shapes {
            if (w, h) != (want_w, want_h) {
                return Err(Error::InvalidArgument(format!(
                    "{name} level is {w}x{h}, expected {want_w}x{want_h}"
                )));
            }
        }
        if ew % 2 != 0 || eh % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "eighth grid {ew}x{eh} must be even to cover a sixteenth grid"
            )));
        }
        if (sixteenth.width(), sixteenth.height()) != (ew / 2, eh / 2) {
            return Err(Error::InvalidArgument(format!(
                "sixteenth level is {}x{}, expected {}x{}",
                sixteenth.width(),
                sixteenth.height(),
                ew / 2,
                eh / 2
            )));
        }
        Ok(Self { half, quarter, eighth, sixteenth })
    }

    pub fn half(&self) -> &FeatureMap {
        &self.half
    }

    pub fn quarter(&self) -> &FeatureMap {
        &self.quarter
    }

    pub fn eighth(&self) -> &FeatureMap {
        &self.eighth
    }

    pub fn sixteenth(&self) -> &FeatureMap {
        &self.sixteenth
    }

    /// Channel counts per level, finest first.
    pub fn channels(&self) -> [usize; 4] {
        [
            self.half.channels(),
            self.quarter.channels(),
            self.eighth.channels(),
            self.sixteenth.channels(),
        ]
    }
}

/// Parameters of the patch embedding: four per-level projections plus the
/// fusion MLP.
#[derive(Debug, Clone)]
pub struct PatchEmbedSpec {
    proj_half: LinearMap,
    proj_quarter: LinearMap,
    proj_eighth: LinearMap,
    proj_sixteenth: LinearMap,
    fuse_hidden: LinearMap,
    fuse_out: LinearMap,
}

impl PatchEmbedSpec {
    /// All four projections must share an output dimension D; the fusion MLP
    /// must accept the 4D concatenation.
    pub fn new(
        proj_half: LinearMap,
        proj_quarter: LinearMap,
        proj_eighth: LinearMap,
        proj_sixteenth: LinearMap,
        fuse_hidden: LinearMap,
        fuse_out: LinearMap,
    ) -> Result<Self> {
        let d = proj_half.out_dim();
        for (map, name) in [
            (&proj_quarter, "quarter"),
            (&proj_eighth, "eighth"),
            (&proj_sixteenth, "sixteenth"),
        ] {
            if map.out_dim() != d {
                return Err(Error::InvalidArgument(format!(
                    "{name} projection emits {} dims, half emits {d}",
                    map.out_dim()
                )));
            }
        }
        if fuse_hidden.in_dim() != 4 * d {
            return Err(Error::InvalidArgument(format!(
                "fusion hidden layer takes {} dims, concatenation has {}",
                fuse_hidden.in_dim(),
                4 * d
            )));
        }
        if fuse_out.in_dim() != fuse_hidden.out_dim() {
            return Err(Error::InvalidArgument(format!(
                "fusion output layer takes {} dims, hidden layer emits {}",
                fuse_out.in_dim(),
                fuse_hidden.out_dim()
            )));
        }
        Ok(Self { proj_half, proj_quarter, proj_eighth, proj_sixteenth, fuse_hidden, fuse_out })
    }

    /// Reproducible random parameters for a pyramid with the given per-level
    /// channel counts (finest first). Layers are drawn in a fixed order:
    /// the four projections finest first, then the two fusion layers.
    pub fn seeded(
        channels: [usize; 4],
        proj_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let [c_half, c_quarter, c_eighth, c_sixteenth] = channels;
        if channels.contains(&0) || proj_dim == 0 || hidden_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidArgument(
                "patch embed dimensions must be positive".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let proj_half = LinearMap::seeded(16 * c_half, proj_dim, &mut rng);
        let proj_quarter = LinearMap::seeded(4 * c_quarter, proj_dim, &mut rng);
        let proj_eighth = LinearMap::seeded(c_eighth, proj_dim, &mut rng);
        let proj_sixteenth = LinearMap::seeded(c_sixteenth, proj_dim, &mut rng);
        let fuse_hidden = LinearMap::seeded(4 * proj_dim, hidden_dim, &mut rng);
        let fuse_out = LinearMap::seeded(hidden_dim, out_dim, &mut rng);
        Self::new(proj_half, proj_quarter, proj_eighth, proj_sixteenth, fuse_hidden, fuse_out)
    }

    /// Output channel count of the fused map.
    pub fn out_dim(&self) -> usize {
        self.fuse_out.out_dim()
    }
}

/// Fuses the pyramid into one map on the 1/8 grid.
///
/// Per 1/8 cell (u, v): the 4x4 half-level patch anchored at (4u, 4v) and the
/// 2x2 quarter-level patch anchored at (2u, 2v) are flattened row-major with
/// channels innermost; the 1/16 gather is the single covering cell
/// (u/2, v/2), so each coarse cell feeds the 2x2 block of 1/8 cells above it.
pub fn multiscale_patch_embed(
    pyramid: &FeaturePyramid,
    spec: &PatchEmbedSpec,
) -> Result<FeatureMap> {
    let [c_half, c_quarter, c_eighth, c_sixteenth] = pyramid.channels();
    let wants = [
        (spec.proj_half.in_dim(), 16 * c_half, "half"),
        (spec.proj_quarter.in_dim(), 4 * c_quarter, "quarter"),
        (spec.proj_eighth.in_dim(), c_eighth, "eighth"),
        (spec.proj_sixteenth.in_dim(), c_sixteenth, "sixteenth"),
    ];
    for (got, want, name) in wants {
        if got != want {
            return Err(Error::InvalidArgument(format!(
                "{name} projection takes {got} dims, gather yields {want}"
            )));
        }
    }
    let d = spec.proj_half.out_dim();
    let (w, h) = (pyramid.eighth.width(), pyramid.eighth.height());

    let mut gather_half = vec![0.0; 16 * c_half];
    let mut gather_quarter = vec![0.0; 4 * c_quarter];
    let mut cat = vec![0.0; 4 * d];
    let mut hidden = vec![0.0; spec.fuse_hidden.out_dim()];

    FeatureMap::from_fn(w, h, spec.fuse_out.out_dim(), PyramidScale::Eighth, |u, v, out| {
        for dy in 0..4 {
            for dx in 0..4 {
                let cell = pyramid.half.cell(4 * u + dx, 4 * v + dy);
                let at = (dy * 4 + dx) * c_half;
                gather_half[at..at + c_half].copy_from_slice(cell);
            }
        }
        for dy in 0..2 {
            for dx in 0..2 {
                let cell = pyramid.quarter.cell(2 * u + dx, 2 * v + dy);
                let at = (dy * 2 + dx) * c_quarter;
                gather_quarter[at..at + c_quarter].copy_from_slice(cell);
            }
        }
        spec.proj_half.apply(&gather_half, &mut cat[..d]);
        spec.proj_quarter.apply(&gather_quarter, &mut cat[d..2 * d]);
        spec.proj_eighth.apply(pyramid.eighth.cell(u, v), &mut cat[2 * d..3 * d]);
        spec.proj_sixteenth.apply(pyramid.sixteenth.cell(u / 2, v / 2), &mut cat[3 * d..]);
        spec.fuse_hidden.apply(&cat, &mut hidden);
        for x in hidden.iter_mut() {
            *x = x.max(0.0);
        }
        spec.fuse_out.apply(&hidden, out);
    })
}
