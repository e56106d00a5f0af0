//! Attention-guided feature upsampling.
//!
//! A low-resolution feature map is lifted by factor `s` using a
//! high-resolution guide: each output position attends over the 3x3
//! neighborhood of its low-res anchor `floor(p / s)`, with weights from the
//! softmax of scaled query/key similarities. The output is a convex
//! combination of projected neighbor values per head, concatenated and
//! projected once more.

use super::LinearMap;
use crate::error::{Error, Result};
use crate::matching::FeatureMap;
use rand::SeedableRng;

/// Offsets of a 3x3 neighborhood, row-major.
const NEIGHBORS: [(i64, i64); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

fn clamped_cell(f: &FeatureMap, u: i64, v: i64) -> &[f64] {
    let uc = u.clamp(0, f.width() as i64 - 1) as usize;
    let vc = v.clamp(0, f.height() as i64 - 1) as usize;
    f.cell(uc, vc)
}

/// Gathers each cell's 3x3 neighborhood with replicate padding. Layout:
/// `(v * width + u) * 9 * C + j * C + c`, neighbors row-major.
pub fn unfold_3x3(f: &FeatureMap) -> Vec<f64> {
    let (w, h, c) = (f.width(), f.height(), f.channels());
    let mut out = Vec::with_capacity(w * h * 9 * c);
    for v in 0..h {
        for u in 0..w {
            for (dx, dy) in NEIGHBORS {
                out.extend_from_slice(clamped_cell(f, u as i64 + dx, v as i64 + dy));
            }
        }
    }
    out
}

/// Multi-head attention parameters for guided upsampling. All four
/// projections are `C -> C`; `C` must divide evenly into heads.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsampleAttention {
    heads: usize,
    channels: usize,
    scale: usize,
    w_q: LinearMap,
    w_k: LinearMap,
    w_v: LinearMap,
    w_out: LinearMap,
}

impl UpsampleAttention {
    pub fn new(
        heads: usize,
        scale: usize,
        w_q: LinearMap,
        w_k: LinearMap,
        w_v: LinearMap,
        w_out: LinearMap,
    ) -> Result<Self> {
        let channels = w_q.in_dim();
        if heads == 0 || channels % heads != 0 {
            return Err(Error::Construction(format!(
                "channels {channels} must divide into {heads} heads"
            )));
        }
        if scale == 0 {
            return Err(Error::Construction("scale factor must be >= 1".into()));
        }
        for (name, m) in [("W_Q", &w_q), ("W_K", &w_k), ("W_V", &w_v), ("W_out", &w_out)] {
            if m.in_dim() != channels || m.out_dim() != channels {
                return Err(Error::Construction(format!(
                    "{name} must be {channels}x{channels}, got {}x{}",
                    m.out_dim(),
                    m.in_dim()
                )));
            }
        }
        Ok(Self {
            heads,
            channels,
            scale,
            w_q,
            w_k,
            w_v,
            w_out,
        })
    }

    /// Identity projections: attention weights still come from the raw
    /// feature similarities, and outputs are plain convex combinations of
    /// the neighbor features.
    pub fn identity(heads: usize, channels: usize, scale: usize) -> Result<Self> {
        let id = LinearMap::identity(channels);
        Self::new(heads, scale, id.clone(), id.clone(), id.clone(), id)
    }

    /// All four projections drawn from a seeded generator, in the order
    /// `W_Q, W_K, W_V, W_out`.
    pub fn seeded(heads: usize, channels: usize, scale: usize, seed: u64) -> Result<Self> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let w_q = LinearMap::seeded(channels, channels, &mut rng);
        let w_k = LinearMap::seeded(channels, channels, &mut rng);
        let w_v = LinearMap::seeded(channels, channels, &mut rng);
        let w_out = LinearMap::seeded(channels, channels, &mut rng);
        Self::new(heads, scale, w_q, w_k, w_v, w_out)
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn scale(&self) -> usize {
        self.scale
    }

    pub fn projections(&self) -> (&LinearMap, &LinearMap, &LinearMap, &LinearMap) {
        (&self.w_q, &self.w_k, &self.w_v, &self.w_out)
    }
}

/// Per-position, per-head attention weights over the 9 neighbors. Layout:
/// `((v * width + u) * heads + head) * 9 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    width: usize,
    height: usize,
    heads: usize,
    weights: Vec<f64>,
}

impl AttentionWeights {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    /// The 9 weights for one position and head.
    pub fn at(&self, u: usize, v: usize, head: usize) -> &[f64] {
        let i = ((v * self.width + u) * self.heads + head) * 9;
        &self.weights[i..i + 9]
    }
}

/// [`guided_upsample`], also returning the attention weights for
/// inspection.
pub fn guided_upsample_detailed(
    f_low: &FeatureMap,
    guide: &FeatureMap,
    attn: &UpsampleAttention,
) -> Result<(FeatureMap, AttentionWeights)> {
    let s = attn.scale();
    let c = attn.channels();
    if guide.width() != f_low.width() * s || guide.height() != f_low.height() * s {
        return Err(Error::InvalidArgument(format!(
            "guide grid {}x{} is not {s}x the low grid {}x{}",
            guide.width(),
            guide.height(),
            f_low.width(),
            f_low.height()
        )));
    }
    if f_low.channels() != c || guide.channels() != c {
        return Err(Error::InvalidArgument(format!(
            "channel counts ({}, {}) must equal the attention width {c}",
            f_low.channels(),
            guide.channels()
        )));
    }

    let (lw, lh) = (f_low.width(), f_low.height());
    let (gw, gh) = (guide.width(), guide.height());
    let heads = attn.heads();
    let dh = c / heads;
    let inv_sqrt = 1.0 / (dh as f64).sqrt();

    // Keys and values over the low grid, computed once.
    let mut keys = vec![0.0; lw * lh * c];
    let mut vals = vec![0.0; lw * lh * c];
    for v in 0..lh {
        for u in 0..lw {
            let i = (v * lw + u) * c;
            attn.w_k.apply(f_low.cell(u, v), &mut keys[i..i + c]);
            attn.w_v.apply(f_low.cell(u, v), &mut vals[i..i + c]);
        }
    }

    let mut out = vec![0.0; gw * gh * c];
    let mut weights = vec![0.0; gw * gh * heads * 9];
    let mut query = vec![0.0; c];
    let mut pre = vec![0.0; c];
    for v in 0..gh {
        for u in 0..gw {
            let (au, av) = ((u / s) as i64, (v / s) as i64);
            let neighbor_idx: Vec<usize> = NEIGHBORS
                .iter()
                .map(|&(dx, dy)| {
                    let nu = (au + dx).clamp(0, lw as i64 - 1) as usize;
                    let nv = (av + dy).clamp(0, lh as i64 - 1) as usize;
                    (nv * lw + nu) * c
                })
                .collect();
            attn.w_q.apply(guide.cell(u, v), &mut query);
            pre.fill(0.0);
            for head in 0..heads {
                let hs = head * dh;
                let q = &query[hs..hs + dh];
                let mut logits = [0.0f64; 9];
                for (j, &ni) in neighbor_idx.iter().enumerate() {
                    let k = &keys[ni + hs..ni + hs + dh];
                    logits[j] = q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>() * inv_sqrt;
                }
                let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for l in logits.iter_mut() {
                    *l = (*l - max).exp();
                    z += *l;
                }
                let wbase = ((v * gw + u) * heads + head) * 9;
                for (j, &ni) in neighbor_idx.iter().enumerate() {
                    let w = logits[j] / z;
                    weights[wbase + j] = w;
                    let val = &vals[ni + hs..ni + hs + dh];
                    for (o, x) in pre[hs..hs + dh].iter_mut().zip(val) {
                        *o += w * x;
                    }
                }
            }
            attn.w_out
                .apply(&pre, &mut out[(v * gw + u) * c..(v * gw + u) * c + c]);
        }
    }
    let fm = FeatureMap::new(gw, gh, c, guide.scale(), out)?;
    Ok((
        fm,
        AttentionWeights {
            width: gw,
            height: gh,
            heads,
            weights,
        },
    ))
}

/// Upsamples `f_low` to the guide's grid with attention weights derived
/// from query (guide) and key (low) similarities over each anchor's 3x3
/// neighborhood.
pub fn guided_upsample(
    f_low: &FeatureMap,
    guide: &FeatureMap,
    attn: &UpsampleAttention,
) -> Result<FeatureMap> {
    guided_upsample_detailed(f_low, guide, attn).map(|(fm, _)| fm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::PyramidScale;
    use rand::{Rng, SeedableRng};

    fn random_map(seed: u64, w: usize, h: usize, c: usize, scale: PyramidScale) -> FeatureMap {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        FeatureMap::from_fn(w, h, c, scale, |_, _, out| {
            for x in out.iter_mut() {
                *x = rng.gen_range(-2.0..2.0);
            }
        })
        .unwrap()
    }

    #[test]
    fn unfold_single_cell_replicates() {
        let f = random_map(1, 1, 1, 3, PyramidScale::Eighth);
        let unfolded = unfold_3x3(&f);
        assert_eq!(unfolded.len(), 9 * 3);
        for j in 0..9 {
            assert_eq!(&unfolded[j * 3..j * 3 + 3], f.cell(0, 0));
        }
    }

    #[test]
    fn unfold_interior_and_border() {
        let f = random_map(2, 4, 4, 2, PyramidScale::Eighth);
        let unfolded = unfold_3x3(&f);
        let at = |u: usize, v: usize, j: usize| {
            let i = ((v * 4 + u) * 9 + j) * 2;
            &unfolded[i..i + 2]
        };
        // Interior cell (1, 2): neighbor 0 is (0, 1), neighbor 8 is (2, 3).
        assert_eq!(at(1, 2, 0), f.cell(0, 1));
        assert_eq!(at(1, 2, 4), f.cell(1, 2));
        assert_eq!(at(1, 2, 8), f.cell(2, 3));
        // Corner (0, 0): out-of-range rows/cols clamp to the edge.
        assert_eq!(at(0, 0, 0), f.cell(0, 0));
        assert_eq!(at(0, 0, 1), f.cell(0, 0));
        assert_eq!(at(0, 0, 5), f.cell(1, 0));
    }

    #[test]
    fn uniform_similarities_average_neighbors() {
        // Zero keys make all logits equal, so every weight is 1/9 and the
        // output (with identity V and output projections) is the neighbor
        // mean.
        let c = 4;
        let zero_k = LinearMap::new(c, c, vec![0.0; c * c], vec![0.0; c]).unwrap();
        let id = LinearMap::identity(c);
        let attn = UpsampleAttention::new(2, 2, id.clone(), zero_k, id.clone(), id).unwrap();
        let low = random_map(3, 3, 3, c, PyramidScale::Quarter);
        let guide = random_map(4, 6, 6, c, PyramidScale::Half);
        let (out, w) = guided_upsample_detailed(&low, &guide, &attn).unwrap();
        for head in 0..2 {
            for &x in w.at(3, 4, head) {
                assert!((x - 1.0 / 9.0).abs() < 1e-12);
            }
        }
        // Interior anchor (1, 1) of the low grid for guide position (3, 3).
        let mut mean = vec![0.0; c];
        for dv in 0..3 {
            for du in 0..3 {
                for (m, x) in mean.iter_mut().zip(low.cell(du, dv)) {
                    *m += x / 9.0;
                }
            }
        }
        for (a, b) in out.cell(3, 3).iter().zip(&mean) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn dominant_key_takes_over() {
        // One neighbor's similarity beats the rest by far more than
        // 40 * sqrt(C / n), so its weight is 1 up to rounding and the output
        // equals its value vector.
        let c = 2;
        let id = LinearMap::identity(c);
        let attn =
            UpsampleAttention::new(1, 2, id.clone(), id.clone(), id.clone(), id).unwrap();
        // Interior anchor (1, 1) so border clamping duplicates nothing; the
        // distinguished cell occupies exactly one neighbor slot.
        let low = FeatureMap::from_fn(3, 3, c, PyramidScale::Quarter, |u, v, out| {
            if (u, v) == (1, 1) {
                out[0] = 100.0;
                out[1] = -7.0;
            } else {
                out[0] = 0.0;
                out[1] = 3.0;
            }
        })
        .unwrap();
        // Guide queries along channel 0 only: similarity is 100 for the
        // distinguished cell, 0 elsewhere.
        let guide = FeatureMap::from_fn(6, 6, c, PyramidScale::Half, |_, _, out| out[0] = 1.0)
            .unwrap();
        let (out, w) = guided_upsample_detailed(&low, &guide, &attn).unwrap();
        let weights = w.at(2, 2, 0);
        let dominant: f64 = weights[4];
        assert!(dominant > 1.0 - 1e-12, "dominant weight {dominant}");
        let cell = out.cell(2, 2);
        assert!((cell[0] - 100.0).abs() / 100.0 < 1e-15);
        assert!((cell[1] - (-7.0)).abs() / 7.0 < 1e-15);
    }

    #[test]
    fn constant_input_passes_through_identity() {
        let c = 3;
        let attn = UpsampleAttention::identity(1, c, 2).unwrap();
        let low = FeatureMap::from_fn(2, 2, c, PyramidScale::Quarter, |_, _, out| {
            out.copy_from_slice(&[0.5, -1.5, 2.0]);
        })
        .unwrap();
        let guide = random_map(7, 4, 4, c, PyramidScale::Half);
        let out = guided_upsample(&low, &guide, &attn).unwrap();
        for v in 0..4 {
            for u in 0..4 {
                for (a, b) in out.cell(u, v).iter().zip(&[0.5, -1.5, 2.0]) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn weights_partition_unity() {
        let c = 6;
        let attn = UpsampleAttention::seeded(3, c, 2, 17).unwrap();
        let low = random_map(8, 3, 2, c, PyramidScale::Quarter);
        let guide = random_map(9, 6, 4, c, PyramidScale::Half);
        let (_, w) = guided_upsample_detailed(&low, &guide, &attn).unwrap();
        for v in 0..4 {
            for u in 0..6 {
                for head in 0..3 {
                    let sum: f64 = w.at(u, v, head).iter().sum();
                    assert!((sum - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn seeded_attention_is_deterministic() {
        let a = UpsampleAttention::seeded(2, 4, 2, 123).unwrap();
        let b = UpsampleAttention::seeded(2, 4, 2, 123).unwrap();
        assert_eq!(a, b);
        let low = random_map(10, 2, 2, 4, PyramidScale::Quarter);
        let guide = random_map(11, 4, 4, 4, PyramidScale::Half);
        let o1 = guided_upsample(&low, &guide, &a).unwrap();
        let o2 = guided_upsample(&low, &guide, &b).unwrap();
        assert_eq!(o1, o2);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let attn = UpsampleAttention::identity(1, 2, 2).unwrap();
        let low = random_map(12, 3, 3, 2, PyramidScale::Quarter);
        let guide = random_map(13, 5, 6, 2, PyramidScale::Half);
        assert!(guided_upsample(&low, &guide, &attn).is_err());
    }
}
