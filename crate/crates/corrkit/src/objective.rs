//! Contrastive matching objective over score volumes.
//!
//! Ground truth enters as a per-pixel discrete distribution over
//! displacement proposals, built by quantizing full-resolution flow into
//! patch-level offset frequencies ([`quantize_gt_distribution`]). The loss
//! is pixel-wise InfoNCE: cross-entropy between that distribution and a
//! temperature-scaled softmax over the volume's scores
//! ([`info_nce_loss`]), with the analytic gradient returned alongside.

use crate::core::DisplacementField;
use crate::error::{Error, Result};
use crate::matching::{ScoreVolume, OUT_OF_BOUNDS_SCORE};
use std::collections::BTreeMap;

/// Sums with a fixed pairwise split so the result is independent of chunking
/// while keeping rounding drift near sqrt(log n) ulps.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Round to nearest integer, ties toward negative infinity.
fn round_half_down(x: f64) -> f64 {
    (x - 0.5).ceil()
}

/// Per-pixel sparse distribution over integer displacement proposals on a
/// low-resolution grid. Cell (u, v) covers the `patch x patch` block of
/// full-resolution pixels anchored at (u*patch, v*patch).
#[derive(Debug, Clone)]
pub struct GtFlowDistribution {
    width: usize,
    height: usize,
    patch: usize,
    entries: Vec<Vec<((i64, i64), f64)>>,
}

impl GtFlowDistribution {
    /// `entries` is row-major over the low-res grid; each pixel's list is
    /// either empty or sums to 1 within 1e-9 with nonnegative masses and
    /// distinct proposals.
    pub fn from_entries(
        width: usize,
        height: usize,
        patch: usize,
        entries: Vec<Vec<((i64, i64), f64)>>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("distribution grid must be nonempty".into()));
        }
        if patch == 0 {
            return Err(Error::InvalidArgument("patch size must be at least 1".into()));
        }
        if entries.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "expected {} pixel entries, got {}",
                width * height,
                entries.len()
            )));
        }
        for (idx, list) in entries.iter().enumerate() {
            if list.is_empty() {
                continue;
            }
            let mut sum = 0.0;
            let mut seen = std::collections::HashSet::new();
            for &(f, p) in list {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "pixel {idx}: probability {p} invalid"
                    )));
                }
                if !seen.insert(f) {
                    return Err(Error::InvalidArgument(format!(
                        "pixel {idx}: duplicate proposal {f:?}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "pixel {idx}: probabilities sum to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { width, height, patch, entries })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn patch(&self) -> usize {
        self.patch
    }

    /// (proposal, probability) pairs at a low-res pixel; empty when no valid
    /// full-res pixel contributed.
    pub fn at(&self, u: usize, v: usize) -> &[((i64, i64), f64)] {
        assert!(u < self.width && v < self.height);
        &self.entries[v * self.width + u]
    }

    /// Pixels carrying a nonempty distribution.
    pub fn populated_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_empty()).count()
    }
}

/// Builds the ground-truth distribution from full-resolution flow.
///
/// For each `patch x patch` block and each valid pixel in it, the target
/// coordinate (pixel + flow) is mapped to the low-res grid by dividing by
/// `patch` and rounding to the nearest cell (ties toward negative
/// infinity). The offset between that cell and the block's own cell is
/// tallied per axis; the block's distribution is the outer product of the
/// two offset frequency tables. Out-of-view targets stay in the count, so
/// support can include proposals a volume never scores. Trailing partial
/// blocks normalize by their actual pixel count.
pub fn quantize_gt_distribution(
    flow_gt: &DisplacementField,
    patch: usize,
) -> Result<GtFlowDistribution> {
    if patch == 0 {
        return Err(Error::InvalidArgument("patch size must be at least 1".into()));
    }
    let (w, h) = (flow_gt.width(), flow_gt.height());
    let lw = w.div_ceil(patch);
    let lh = h.div_ceil(patch);
    let mut entries = Vec::with_capacity(lw * lh);
    for pv in 0..lh {
        for pu in 0..lw {
            let mut freq_u: BTreeMap<i64, usize> = BTreeMap::new();
            let mut freq_v: BTreeMap<i64, usize> = BTreeMap::new();
            let mut count = 0usize;
            for v in pv * patch..((pv + 1) * patch).min(h) {
                for u in pu * patch..((pu + 1) * patch).min(w) {
                    let Some((du, dv)) = flow_gt.get(u, v) else { continue };
                    let qu = round_half_down((u as f64 + du) / patch as f64) as i64;
                    let qv = round_half_down((v as f64 + dv) / patch as f64) as i64;
                    *freq_u.entry(qu - pu as i64).or_insert(0) += 1;
                    *freq_v.entry(qv - pv as i64).or_insert(0) += 1;
                    count += 1;
                }
            }
            if count == 0 {
                entries.push(Vec::new());
                continue;
            }
            let n = count as f64;
            let mut list = Vec::with_capacity(freq_u.len() * freq_v.len());
            for (&fu, &cu) in &freq_u {
                for (&fv, &cv) in &freq_v {
                    list.push(((fu, fv), (cu as f64 / n) * (cv as f64 / n)));
                }
            }
            entries.push(list);
        }
    }
    GtFlowDistribution::from_entries(lw, lh, patch, entries)
}

/// InfoNCE settings. The softmax temperature divides every score.
#[derive(Debug, Clone, Copy)]
pub struct LossConfig {
    pub temperature: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { temperature: 0.07 }
    }
}

/// Loss value with its per-pixel breakdown and analytic gradient.
#[derive(Debug, Clone)]
pub struct LossReport {
    loss: f64,
    per_pixel: Vec<f64>,
    counted: usize,
    grad: Vec<f64>,
    width: usize,
    height: usize,
    proposal_count: usize,
}

impl LossReport {
    /// Mean per-pixel loss over pixels with a nonempty distribution.
    pub fn loss(&self) -> f64 {
        self.loss
    }

    /// Row-major per-pixel losses; NaN marks skipped pixels.
    pub fn per_pixel(&self) -> &[f64] {
        &self.per_pixel
    }

    /// Pixels that contributed to the mean.
    pub fn counted(&self) -> usize {
        self.counted
    }

    /// d loss / d score in the volume's layout, mean reduction included.
    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    /// Gradient row for one pixel, one slot per proposal.
    pub fn grad_at(&self, u: usize, v: usize) -> &[f64] {
        assert!(u < self.width && v < self.height);
        let at = (v * self.width + u) * self.proposal_count;
        &self.grad[at..at + self.proposal_count]
    }
}

/// Pixel-wise InfoNCE between a score volume and a ground-truth
/// distribution on the same grid.
///
/// Per pixel the loss is the cross-entropy between the distribution and
/// softmax(scores / temperature), evaluated with a stable log-sum-exp over
/// the volume's stored proposals. Support entries the volume does not
/// score (out-of-view targets) contribute with the out-of-bounds score of
/// -1 in the numerator only; they have no gradient slot. Pixels with empty
/// distributions are skipped and the mean is taken over the rest.
pub fn info_nce_loss(
    s: &ScoreVolume,
    p: &GtFlowDistribution,
    cfg: &LossConfig,
) -> Result<LossReport> {
    if !(cfg.temperature > 0.0) || !cfg.temperature.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "temperature {} must be positive and finite",
            cfg.temperature
        )));
    }
    if (s.width(), s.height()) != (p.width(), p.height()) {
        return Err(Error::InvalidArgument(format!(
            "volume grid {}x{} does not match distribution grid {}x{}",
            s.width(),
            s.height(),
            p.width(),
            p.height()
        )));
    }
    let tau = cfg.temperature;
    let (w, h) = (s.width(), s.height());
    let k = s.proposals().len();
    let mut per_pixel = vec![f64::NAN; w * h];
    let mut grad = vec![0.0; w * h * k];
    let mut softmax = vec![0.0; k];
    let mut counted = 0usize;

    for v in 0..h {
        for u in 0..w {
            let support = p.at(u, v);
            if support.is_empty() {
                continue;
            }
            let idx = v * w + u;
            let scores = s.scores_at(u, v);
            let m = scores.iter().fold(f64::NEG_INFINITY, |a, &x| a.max(x / tau));
            let mut z = 0.0;
            for (j, &x) in scores.iter().enumerate() {
                let e = (x / tau - m).exp();
                softmax[j] = e;
                z += e;
            }
            let lse = m + z.ln();
            for e in softmax.iter_mut() {
                *e /= z;
            }
            let mut loss_px = 0.0;
            let row = &mut grad[idx * k..(idx + 1) * k];
            for (j, &sm) in softmax.iter().enumerate() {
                row[j] = sm / tau;
            }
            for &(f, mass) in support {
                let score = match s.proposals().index_of(f) {
                    Some(j) => {
                        row[j] -= mass / tau;
                        scores[j]
                    }
                    None => OUT_OF_BOUNDS_SCORE,
                };
                loss_px += mass * (lse - score / tau);
            }
            per_pixel[idx] = loss_px;
            counted += 1;
        }
    }

    let loss = if counted == 0 {
        0.0
    } else {
        let present: Vec<f64> =
            per_pixel.iter().copied().filter(|x| !x.is_nan()).collect();
        pairwise_sum(&present) / counted as f64
    };
    if counted > 0 {
        let inv = 1.0 / counted as f64;
        for g in grad.iter_mut() {
            *g *= inv;
        }
    }
    Ok(LossReport { loss, per_pixel, counted, grad, width: w, height: h, proposal_count: k })
}
