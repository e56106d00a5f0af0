//! Displacement proposal sets and cosine score volumes.

use std::collections::HashMap;

use super::FeatureMap;
use crate::core::{DisparityMap, DisplacementField};
use crate::error::{Error, Result};

/// How a proposal set was laid out. The layout gates which operations apply
/// (disparity readout needs `DisparityRange`; trilinear upsampling needs a
/// dense 1D or square 2D lattice).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    /// `(0, 0), (-1, 0), ..., (-(D-1), 0)`: leftward horizontal shifts,
    /// proposal index = disparity level.
    DisparityRange,
    /// Every displacement that can connect two cells of a `w x h` grid.
    Full2d,
    /// All integer displacements with both components in `[-r, r]`.
    Window,
    /// Caller-supplied list.
    Custom,
}

/// An ordered list of unique integer displacement proposals `(f_u, f_v)`.
#[derive(Debug, Clone)]
pub struct ProposalSet {
    kind: ProposalKind,
    list: Vec<(i64, i64)>,
    index: HashMap<(i64, i64), usize>,
}

impl PartialEq for ProposalSet {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.list == other.list
    }
}

impl ProposalSet {
    fn build(kind: ProposalKind, list: Vec<(i64, i64)>) -> Result<Self> {
        if list.is_empty() {
            return Err(Error::Construction("proposal set is empty".into()));
        }
        let mut index = HashMap::with_capacity(list.len());
        for (i, &f) in list.iter().enumerate() {
            if index.insert(f, i).is_some() {
                return Err(Error::Construction(format!(
                    "duplicate proposal ({}, {})",
                    f.0, f.1
                )));
            }
        }
        Ok(Self { kind, list, index })
    }

    /// Disparity levels `0..levels`, stored as displacements `(-d, 0)`.
    pub fn disparity_range(levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::InvalidArgument(
                "disparity range needs at least one level".into(),
            ));
        }
        let list = (0..levels as i64).map(|d| (-d, 0)).collect();
        Self::build(ProposalKind::DisparityRange, list)
    }

    /// Every displacement connecting two cells of a `grid_w x grid_h` grid:
    /// `f_u` in `[-(w-1), w-1]`, `f_v` in `[-(h-1), h-1]`.
    pub fn full_2d(grid_w: usize, grid_h: usize) -> Result<Self> {
        if grid_w == 0 || grid_h == 0 {
            return Err(Error::InvalidArgument(
                "full_2d grid must be at least 1x1".into(),
            ));
        }
        let (w, h) = (grid_w as i64, grid_h as i64);
        let mut list = Vec::with_capacity(((2 * w - 1) * (2 * h - 1)) as usize);
        for fv in -(h - 1)..=(h - 1) {
            for fu in -(w - 1)..=(w - 1) {
                list.push((fu, fv));
            }
        }
        Self::build(ProposalKind::Full2d, list)
    }

    /// All displacements with both components in `[-radius, radius]`.
    pub fn window(radius: usize) -> Self {
        let r = radius as i64;
        let mut list = Vec::with_capacity((2 * radius + 1).pow(2));
        for fv in -r..=r {
            for fu in -r..=r {
                list.push((fu, fv));
            }
        }
        Self::build(ProposalKind::Window, list).unwrap()
    }

    /// Caller-supplied proposal list; rejects duplicates.
    pub fn custom(list: Vec<(i64, i64)>) -> Result<Self> {
        Self::build(ProposalKind::Custom, list)
    }

    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn proposals(&self) -> &[(i64, i64)] {
        &self.list
    }

    pub fn get(&self, k: usize) -> (i64, i64) {
        self.list[k]
    }

    /// Index of a displacement in this set, if present.
    pub fn index_of(&self, f: (i64, i64)) -> Option<usize> {
        self.index.get(&f).copied()
    }
}

/// Score assigned to proposals whose target cell falls outside the grid.
/// It is the cosine minimum, keeping the volume dense and the argmax total.
pub const OUT_OF_BOUNDS_SCORE: f64 = -1.0;

/// Per-pixel score vector over a proposal set, stored
/// `(v * width + u) * len + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVolume {
    width: usize,
    height: usize,
    proposals: ProposalSet,
    scores: Vec<f64>,
}

impl ScoreVolume {
    pub fn new(
        width: usize,
        height: usize,
        proposals: ProposalSet,
        scores: Vec<f64>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Construction(format!(
                "volume grid must be at least 1x1, got {width}x{height}"
            )));
        }
        if scores.len() != width * height * proposals.len() {
            return Err(Error::Construction(format!(
                "score count {} does not match {width}x{height}x{}",
                scores.len(),
                proposals.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|x| !x.is_finite()) {
            return Err(Error::Construction(format!(
                "volume contains non-finite score {bad}"
            )));
        }
        Ok(Self {
            width,
            height,
            proposals,
            scores,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn proposals(&self) -> &ProposalSet {
        &self.proposals
    }

    pub fn get(&self, u: usize, v: usize, k: usize) -> f64 {
        self.scores_at(u, v)[k]
    }

    /// The score vector for pixel `(u, v)`, indexed like the proposal list.
    pub fn scores_at(&self, u: usize, v: usize) -> &[f64] {
        debug_assert!(u < self.width && v < self.height);
        let n = self.proposals.len();
        let i = (v * self.width + u) * n;
        &self.scores[i..i + n]
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

fn normalized_cells(f: &FeatureMap) -> Vec<f64> {
    let c = f.channels();
    let mut out = f.data().to_vec();
    for cell in out.chunks_mut(c) {
        let norm = cell.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in cell.iter_mut() {
                *x /= norm;
            }
        }
        // Zero-norm cells stay zero and score 0 against everything.
    }
    out
}

/// Scores every proposal at every cell by the cosine similarity of the
/// (internally L2-normalized) reference and target features:
/// `S(u, v, f) = <ref_hat(u, v), tar_hat(u + f_u, v + f_v)>`. Proposals whose
/// target cell is out of bounds get [`OUT_OF_BOUNDS_SCORE`].
pub fn cosine_score_volume(
    f_ref: &FeatureMap,
    f_tar: &FeatureMap,
    proposals: &ProposalSet,
) -> Result<ScoreVolume> {
    if !f_ref.same_shape(f_tar) || f_ref.scale() != f_tar.scale() {
        return Err(Error::InvalidArgument(format!(
            "feature grids must match: {}x{}x{} vs {}x{}x{}",
            f_ref.width(),
            f_ref.height(),
            f_ref.channels(),
            f_tar.width(),
            f_tar.height(),
            f_tar.channels()
        )));
    }
    let (w, h, c) = (f_ref.width(), f_ref.height(), f_ref.channels());
    let nref = normalized_cells(f_ref);
    let ntar = normalized_cells(f_tar);
    let mut scores = Vec::with_capacity(w * h * proposals.len());
    for v in 0..h {
        for u in 0..w {
            let a = &nref[(v * w + u) * c..(v * w + u) * c + c];
            for &(fu, fv) in proposals.proposals() {
                let (tu, tv) = (u as i64 + fu, v as i64 + fv);
                if tu < 0 || tv < 0 || tu >= w as i64 || tv >= h as i64 {
                    scores.push(OUT_OF_BOUNDS_SCORE);
                    continue;
                }
                let j = (tv as usize * w + tu as usize) * c;
                let b = &ntar[j..j + c];
                scores.push(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>());
            }
        }
    }
    ScoreVolume::new(w, h, proposals.clone(), scores)
}

/// Returns true when `a` beats `b` under the tie rule: higher score first,
/// then smaller displacement magnitude, then lexicographic `(f_u, f_v)`.
fn better(a: (f64, (i64, i64)), b: (f64, (i64, i64))) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    let na = a.1 .0 * a.1 .0 + a.1 .1 * a.1 .1;
    let nb = b.1 .0 * b.1 .0 + b.1 .1 * b.1 .1;
    if na != nb {
        return na < nb;
    }
    a.1 < b.1
}

/// Per-pixel best proposal as a (fully valid) displacement field. Ties break
/// toward smaller `||f||`, then lexicographic `(f_u, f_v)`.
pub fn argmax_regress(volume: &ScoreVolume) -> DisplacementField {
    let props = volume.proposals().proposals();
    DisplacementField::from_fn(volume.width(), volume.height(), |u, v| {
        let scores = volume.scores_at(u, v);
        let mut best = (scores[0], props[0]);
        for (k, &s) in scores.iter().enumerate().skip(1) {
            let cand = (s, props[k]);
            if better(cand, best) {
                best = cand;
            }
        }
        Some((best.1 .0 as f64, best.1 .1 as f64))
    })
    .expect("volume dimensions are validated at construction")
}

/// Disparity readout of a [`ProposalKind::DisparityRange`] volume:
/// `d = -f_u` of the per-pixel argmax.
pub fn argmax_disparity(volume: &ScoreVolume) -> Result<DisparityMap> {
    if volume.proposals().kind() != ProposalKind::DisparityRange {
        return Err(Error::InvalidArgument(
            "disparity readout requires a disparity-range proposal set".into(),
        ));
    }
    let field = argmax_regress(volume);
    DisparityMap::from_fn(field.width(), field.height(), |u, v| {
        field.get(u, v).map(|(du, _)| -du)
    })
}

/// Samples a 1D lattice linearly at real coordinate `x`, clamped to the
/// lattice ends.
fn lin_weights(x: f64, len: usize) -> (usize, usize, f64) {
    let xc = x.clamp(0.0, (len - 1) as f64);
    let i0 = xc.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, xc - i0 as f64)
}

/// Lifts a volume computed at 1/k resolution to full resolution: bilinear
/// over the pixel grid (half-pixel-center alignment) and linear along each
/// proposal axis, with proposal coordinates scaled by `k` (a disparity level
/// `d` becomes `d * k`). Supports `DisparityRange` and `Window` layouts,
/// whose lattices densify under scaling.
pub fn upsample_volume_trilinear(volume: &ScoreVolume, k: usize) -> Result<ScoreVolume> {
    if k == 0 {
        return Err(Error::InvalidArgument("scale factor must be >= 1".into()));
    }
    if k == 1 {
        return Ok(volume.clone());
    }
    let (w, h) = (volume.width(), volume.height());
    let (nw, nh) = (w * k, h * k);

    // For each output proposal: the source proposal lattice coordinates to
    // blend, per axis.
    enum Axis {
        One(Vec<(usize, usize, f64)>),
        Two {
            radius: usize,
            side: usize,
            weights: Vec<(usize, usize, f64)>,
        },
    }
    let (new_props, axis) = match volume.proposals().kind() {
        ProposalKind::DisparityRange => {
            let levels = volume.proposals().len();
            let new_levels = (levels - 1) * k + 1;
            let props = ProposalSet::disparity_range(new_levels)?;
            let weights = (0..new_levels)
                .map(|d| lin_weights(d as f64 / k as f64, levels))
                .collect();
            (props, Axis::One(weights))
        }
        ProposalKind::Window => {
            let radius = ((volume.proposals().len() as f64).sqrt() as usize - 1) / 2;
            let new_radius = radius * k;
            let props = ProposalSet::window(new_radius);
            let weights = (0..2 * new_radius + 1)
                .map(|i| {
                    let offset = i as f64 - new_radius as f64;
                    lin_weights(offset / k as f64 + radius as f64, 2 * radius + 1)
                })
                .collect();
            (
                props,
                Axis::Two {
                    radius: new_radius,
                    side: 2 * radius + 1,
                    weights,
                },
            )
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "trilinear upsampling is undefined for {other:?} proposal sets"
            )))
        }
    };

    let np = new_props.len();
    let mut scores = vec![0.0; nw * nh * np];
    for vy in 0..nh {
        let sy = ((vy as f64 + 0.5) / k as f64 - 0.5).max(0.0);
        let (y0, y1, wy) = lin_weights(sy, h);
        for vx in 0..nw {
            let sx = ((vx as f64 + 0.5) / k as f64 - 0.5).max(0.0);
            let (x0, x1, wx) = lin_weights(sx, w);
            let corners = [
                (volume.scores_at(x0, y0), (1.0 - wx) * (1.0 - wy)),
                (volume.scores_at(x1, y0), wx * (1.0 - wy)),
                (volume.scores_at(x0, y1), (1.0 - wx) * wy),
                (volume.scores_at(x1, y1), wx * wy),
            ];
            let out = &mut scores[(vy * nw + vx) * np..(vy * nw + vx) * np + np];
            match &axis {
                Axis::One(weights) => {
                    for (kp, &(i0, i1, t)) in weights.iter().enumerate() {
                        let mut acc = 0.0;
                        for (row, cw) in corners {
                            acc += cw * (row[i0] * (1.0 - t) + row[i1] * t);
                        }
                        out[kp] = acc;
                    }
                }
                Axis::Two {
                    radius,
                    side,
                    weights,
                } => {
                    let stride = 2 * radius + 1;
                    for kp in 0..np {
                        let (iu, iv) = (kp % stride, kp / stride);
                        let (u0, u1, tu) = weights[iu];
                        let (v0, v1, tv) = weights[iv];
                        let mut acc = 0.0;
                        for (row, cw) in corners {
                            let s00 = row[v0 * side + u0];
                            let s10 = row[v0 * side + u1];
                            let s01 = row[v1 * side + u0];
                            let s11 = row[v1 * side + u1];
                            acc += cw
                                * (s00 * (1.0 - tu) * (1.0 - tv)
                                    + s10 * tu * (1.0 - tv)
                                    + s01 * (1.0 - tu) * tv
                                    + s11 * tu * tv);
                        }
                        out[kp] = acc;
                    }
                }
            }
        }
    }
    ScoreVolume::new(nw, nh, new_props, scores)
}

/// Fuses volumes over the same grid and proposal set by multiplying their
/// per-pixel softmax normalizations elementwise. Output scores lie in
/// `(0, 1]` rather than the cosine range; relative ordering per pixel is the
/// ordering of the summed raw scores.
///
/// Softmax-then-product is one reading of "fuse through dot product"; the
/// normalization after fusion is not pinned down by any contract here.
pub fn fuse_volumes(volumes: &[ScoreVolume]) -> Result<ScoreVolume> {
    let first = volumes
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one volume to fuse".into()))?;
    for v in &volumes[1..] {
        if v.width() != first.width()
            || v.height() != first.height()
            || v.proposals() != first.proposals()
        {
            return Err(Error::InvalidArgument(
                "fused volumes must share grid and proposal set".into(),
            ));
        }
    }
    let np = first.proposals().len();
    let mut scores = vec![1.0; first.width() * first.height() * np];
    let mut soft = vec![0.0; np];
    for vol in volumes {
        for v in 0..first.height() {
            for u in 0..first.width() {
                let row = vol.scores_at(u, v);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for (k, &s) in row.iter().enumerate() {
                    soft[k] = (s - max).exp();
                    z += soft[k];
                }
                let base = (v * first.width() + u) * np;
                for k in 0..np {
                    scores[base + k] *= soft[k] / z;
                }
            }
        }
    }
    ScoreVolume::new(first.width(), first.height(), first.proposals().clone(), scores)
}
