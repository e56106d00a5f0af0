//! Forward-backward consistency filtering.

use crate::core::{ConfidenceMap, DisplacementField};

/// Bilinear sample of a displacement field at a continuous point.
///
/// Returns `None` when the point leaves `[0, w-1] x [0, h-1]` or any of the
/// four surrounding pixels is invalid. Corner indices are clamped so points
/// on the far edge read the boundary pixel.
pub fn sample_bilinear(field: &DisplacementField, x: f64, y: f64) -> Option<(f64, f64)> {
    let (w, h) = (field.width(), field.height());
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let (a_u, a_v) = field.get(x0, y0)?;
    let (b_u, b_v) = field.get(x1, y0)?;
    let (c_u, c_v) = field.get(x0, y1)?;
    let (d_u, d_v) = field.get(x1, y1)?;
    let w00 = (1.0 - fx) * (1.0 - fy);
    let w10 = fx * (1.0 - fy);
    let w01 = (1.0 - fx) * fy;
    let w11 = fx * fy;
    Some((
        w00 * a_u + w10 * b_u + w01 * c_u + w11 * d_u,
        w00 * a_v + w10 * b_v + w01 * c_v + w11 * d_v,
    ))
}

/// Forward-backward consistency with an absolute residual threshold.
///
/// For each reference pixel p with valid forward flow, the landing point
/// p + fwd(p) is checked against the target image bounds and the backward
/// field is sampled there bilinearly. Confidence is 1 iff the round trip
/// residual `|fwd(p) + bwd(p + fwd(p))|` is at most `tau_c`; pixels with
/// invalid flow, out-of-bounds landings, or invalid backward samples get 0.
pub fn cycle_consistency(
    fwd: &DisplacementField,
    bwd: &DisplacementField,
    tau_c: f64,
) -> ConfidenceMap {
    cycle_consistency_relative(fwd, bwd, tau_c, 0.0)
}

/// Like [`cycle_consistency`] with a flow-magnitude-relative term: the
/// per-pixel threshold is `tau_abs + tau_rel * |fwd(p)|`.
pub fn cycle_consistency_relative(
    fwd: &DisplacementField,
    bwd: &DisplacementField,
    tau_abs: f64,
    tau_rel: f64,
) -> ConfidenceMap {
    let (w, h) = (fwd.width(), fwd.height());
    let mut c = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let Some((du, dv)) = fwd.get(u, v) else { continue };
            let x = u as f64 + du;
            let y = v as f64 + dv;
            let Some((bu, bv)) = sample_bilinear(bwd, x, y) else { continue };
            let r = ((du + bu).powi(2) + (dv + bv).powi(2)).sqrt();
            let tau = tau_abs + tau_rel * (du * du + dv * dv).sqrt();
            if r <= tau {
                c[v * w + u] = 1.0;
            }
        }
    }
    ConfidenceMap::from_parts(w, h, c).expect("binary confidences are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_translation_pair_is_confident() {
        let fwd = DisplacementField::filled(8, 8, 2.0, 1.0).unwrap();
        let bwd = DisplacementField::filled(8, 8, -2.0, -1.0).unwrap();
        let conf = cycle_consistency(&fwd, &bwd, 0.0);
        // Pixels landing outside the 8x8 target fail the bounds rule.
        for v in 0..8 {
            for u in 0..8 {
                let inside = u as f64 + 2.0 <= 7.0 && v as f64 + 1.0 <= 7.0;
                assert_eq!(conf.get(u, v) == 1.0, inside, "pixel ({u}, {v})");
            }
        }
    }

    #[test]
    fn landing_out_of_bounds_rejected() {
        let fwd = DisplacementField::filled(4, 4, 100.0, 0.0).unwrap();
        let bwd = DisplacementField::filled(4, 4, -100.0, 0.0).unwrap();
        let conf = cycle_consistency(&fwd, &bwd, 10.0);
        assert_eq!(conf.confident_count(), 0);
    }

    #[test]
    fn inconsistent_backward_rejected() {
        let fwd = DisplacementField::filled(4, 4, 1.0, 0.0).unwrap();
        let bwd = DisplacementField::filled(4, 4, 3.0, 0.0).unwrap();
        // Residual is 4 everywhere; passes at 4, fails just below.
        assert_eq!(cycle_consistency(&fwd, &bwd, 4.0).confident_count(), 12);
        assert_eq!(cycle_consistency(&fwd, &bwd, 3.99).confident_count(), 0);
    }

    #[test]
    fn invalid_backward_sample_rejected() {
        let fwd = DisplacementField::filled(3, 1, 1.0, 0.0).unwrap();
        let bwd = DisplacementField::from_fn(3, 1, |u, _| {
            if u == 1 {
                None
            } else {
                Some((-1.0, 0.0))
            }
        })
        .unwrap();
        let conf = cycle_consistency(&fwd, &bwd, 0.5);
        // Pixel 0 lands on the invalid backward pixel 1; pixel 1 lands on 2.
        assert_eq!(conf.get(0, 0), 0.0);
        assert_eq!(conf.get(1, 0), 1.0);
        assert_eq!(conf.get(2, 0), 0.0);
    }

    #[test]
    fn subpixel_landing_uses_bilinear_blend() {
        let fwd = DisplacementField::filled(3, 1, 0.5, 0.0).unwrap();
        // Backward flow ramps from 0 to -2 across three pixels, so the
        // sample halfway between pixels 0 and 1 is -0.5.
        let bwd = DisplacementField::from_fn(3, 1, |u, _| Some((-(u as f64), 0.0))).unwrap();
        let got = sample_bilinear(&bwd, 0.5, 0.0).unwrap();
        assert!((got.0 + 0.5).abs() < 1e-15);
        let conf = cycle_consistency(&fwd, &bwd, 1e-12);
        assert_eq!(conf.get(0, 0), 1.0);
    }

    #[test]
    fn relative_threshold_scales_with_flow() {
        let fwd = DisplacementField::filled(8, 1, 4.0, 0.0).unwrap();
        let bwd = DisplacementField::filled(8, 1, -3.0, 0.0).unwrap();
        // Residual 1; absolute tau 0 fails, relative 30% of |fwd| = 1.2 passes.
        assert_eq!(cycle_consistency(&fwd, &bwd, 0.0).confident_count(), 0);
        let conf = cycle_consistency_relative(&fwd, &bwd, 0.0, 0.3);
        assert_eq!(conf.confident_count(), 4);
    }

    #[test]
    fn role_swap_marks_mirrored_pixels() {
        let fwd = DisplacementField::filled(6, 6, 1.0, 0.0).unwrap();
        let bwd = DisplacementField::filled(6, 6, -1.0, 0.0).unwrap();
        let a = cycle_consistency(&fwd, &bwd, 0.0);
        let b = cycle_consistency(&bwd, &fwd, 0.0);
        for v in 0..6 {
            for u in 0..5 {
                // fwd confident at u iff bwd confident at the landing u+1.
                assert_eq!(a.get(u, v), b.get(u + 1, v));
            }
        }
    }
}
