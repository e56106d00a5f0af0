//! The cosine score volume and argmax readout against a quadruple-loop
//! reference matcher.

use corrkit::matching::{
    argmax_regress, census_descriptor, cosine_score_volume, FeatureMap, GrayImage, ProposalSet,
    PyramidScale, ScoreVolume, OUT_OF_BOUNDS_SCORE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_features(seed: u64, w: usize, h: usize, c: usize) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    FeatureMap::from_fn(w, h, c, PyramidScale::Eighth, |_, _, out| {
        for x in out.iter_mut() {
            *x = rng.gen_range(-2.0..2.0);
        }
    })
    .unwrap()
}

/// Reference implementation: normalize, then four explicit loops with the
/// same out-of-bounds and tie rules.
fn brute_force_volume(f_ref: &FeatureMap, f_tar: &FeatureMap, props: &ProposalSet) -> Vec<f64> {
    let (w, h, c) = (f_ref.width(), f_ref.height(), f_ref.channels());
    let norm = |f: &FeatureMap, u: usize, v: usize| -> Vec<f64> {
        let cell = f.cell(u, v);
        let n = cell.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            vec![0.0; c]
        } else {
            cell.iter().map(|x| x / n).collect()
        }
    };
    let mut out = Vec::with_capacity(w * h * props.len());
    for v in 0..h {
        for u in 0..w {
            let a = norm(f_ref, u, v);
            for &(fu, fv) in props.proposals() {
                let (tu, tv) = (u as i64 + fu, v as i64 + fv);
                if tu < 0 || tv < 0 || tu >= w as i64 || tv >= h as i64 {
                    out.push(OUT_OF_BOUNDS_SCORE);
                } else {
                    let b = norm(f_tar, tu as usize, tv as usize);
                    out.push(a.iter().zip(&b).map(|(x, y)| x * y).sum());
                }
            }
        }
    }
    out
}

fn brute_force_argmax(volume: &ScoreVolume) -> Vec<(i64, i64)> {
    let props = volume.proposals().proposals();
    let mut out = Vec::new();
    for v in 0..volume.height() {
        for u in 0..volume.width() {
            let scores = volume.scores_at(u, v);
            let mut best = 0usize;
            for k in 1..scores.len() {
                let (sb, sk) = (scores[best], scores[k]);
                let nb = props[best].0.pow(2) + props[best].1.pow(2);
                let nk = props[k].0.pow(2) + props[k].1.pow(2);
                if sk > sb || (sk == sb && (nk < nb || (nk == nb && props[k] < props[best]))) {
                    best = k;
                }
            }
            out.push(props[best]);
        }
    }
    out
}

#[test]
fn volume_and_argmax_match_reference_matcher_over_50_seeds() {
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(97).wrapping_add(13));
        let c = rng.gen_range(2..6);
        let f_ref = random_features(seed * 2 + 1, 32, 32, c);
        let f_tar = random_features(seed * 2 + 2, 32, 32, c);
        let props = if seed % 2 == 0 {
            ProposalSet::window(2)
        } else {
            ProposalSet::disparity_range(8).unwrap()
        };
        let volume = cosine_score_volume(&f_ref, &f_tar, &props).unwrap();
        let oracle = brute_force_volume(&f_ref, &f_tar, &props);
        assert_eq!(volume.scores(), oracle.as_slice(), "seed {seed}");

        let field = argmax_regress(&volume);
        let picks = brute_force_argmax(&volume);
        for v in 0..32 {
            for u in 0..32 {
                let (du, dv) = field.get(u, v).unwrap();
                let want = picks[v * 32 + u];
                assert_eq!((du as i64, dv as i64), want, "seed {seed} pixel ({u},{v})");
            }
        }
    }
}

#[test]
fn integer_shift_is_recovered_at_every_inbounds_pixel() {
    for seed in 0..10u64 {
        let shift = (3i64, -2i64);
        let f_tar = random_features(seed + 400, 16, 16, 5);
        // Reference features sample the target at (u + 3, v - 2), so the
        // correct proposal scores exactly 1 wherever it lands in bounds.
        let f_ref = FeatureMap::from_fn(16, 16, 5, PyramidScale::Eighth, |u, v, out| {
            let tu = (u as i64 + shift.0).clamp(0, 15) as usize;
            let tv = (v as i64 + shift.1).clamp(0, 15) as usize;
            out.copy_from_slice(f_tar.cell(tu, tv));
        })
        .unwrap();
        let volume = cosine_score_volume(&f_ref, &f_tar, &ProposalSet::window(4)).unwrap();
        let field = argmax_regress(&volume);
        for v in 0..16usize {
            for u in 0..16usize {
                let inb = (u as i64 + shift.0) >= 0
                    && (u as i64 + shift.0) < 16
                    && (v as i64 + shift.1) >= 0
                    && (v as i64 + shift.1) < 16;
                if !inb {
                    continue;
                }
                let (du, dv) = field.get(u, v).unwrap();
                assert_eq!(
                    (du as i64, dv as i64),
                    shift,
                    "seed {seed} pixel ({u},{v})"
                );
            }
        }
    }
}

#[test]
fn swapping_views_and_negating_proposals_mirrors_scores() {
    let f_ref = random_features(21, 12, 10, 4);
    let f_tar = random_features(22, 12, 10, 4);
    let props = ProposalSet::window(2);
    let negated = ProposalSet::custom(
        props.proposals().iter().map(|&(a, b)| (-a, -b)).collect(),
    )
    .unwrap();
    let fwd = cosine_score_volume(&f_ref, &f_tar, &props).unwrap();
    let rev = cosine_score_volume(&f_tar, &f_ref, &negated).unwrap();
    for v in 0..10i64 {
        for u in 0..12i64 {
            for (k, &(fu, fv)) in props.proposals().iter().enumerate() {
                let (tu, tv) = (u + fu, v + fv);
                if tu < 0 || tv < 0 || tu >= 12 || tv >= 10 {
                    continue;
                }
                let a = fwd.get(u as usize, v as usize, k);
                let b = rev.get(tu as usize, tv as usize, k);
                assert!((a - b).abs() < 1e-12, "({u},{v}) proposal {k}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn positive_feature_scaling_leaves_volume_unchanged() {
    let f_ref = random_features(31, 9, 8, 6);
    let f_tar = random_features(32, 9, 8, 6);
    let props = ProposalSet::window(1);
    let base = cosine_score_volume(&f_ref, &f_tar, &props).unwrap();
    for scale in [0.02, 7.0, 1234.5] {
        let scaled = FeatureMap::from_fn(9, 8, 6, PyramidScale::Eighth, |u, v, out| {
            for (o, x) in out.iter_mut().zip(f_ref.cell(u, v)) {
                *o = x * scale;
            }
        })
        .unwrap();
        let vol = cosine_score_volume(&scaled, &f_tar, &props).unwrap();
        for (a, b) in vol.scores().iter().zip(base.scores()) {
            assert!((a - b).abs() < 1e-9);
        }
        let f1 = argmax_regress(&vol);
        let f2 = argmax_regress(&base);
        assert_eq!(f1, f2);
    }
}

#[test]
fn census_matching_recovers_constant_disparity() {
    // A textured left image shifted right by 4 pixels; census descriptors
    // plus a disparity sweep must pick d = 4 at nearly every pixel away
    // from the contaminated left border. A small tie rate is inherent:
    // windows whose center is the local extremum yield degenerate all-equal
    // descriptors, and exact score ties break toward zero displacement.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let w = 40usize;
    let h = 24usize;
    let d = 4usize;
    let right = GrayImage::from_fn(w, h, |_, _| rng.gen::<f32>()).unwrap();
    let left = GrayImage::from_fn(w, h, |u, v| {
        if u >= d {
            right.get(u - d, v)
        } else {
            0.0
        }
    })
    .unwrap();
    let fl = census_descriptor(&left, 5).unwrap();
    let fr = census_descriptor(&right, 5).unwrap();
    let volume = cosine_score_volume(&fl, &fr, &ProposalSet::disparity_range(9).unwrap()).unwrap();
    let field = argmax_regress(&volume);
    let mut total = 0usize;
    let mut wrong = 0usize;
    // Skip a border wide enough to clear both the shift seam and the census
    // window support.
    for v in 3..h - 3 {
        for u in d + 3..w - 3 {
            let (du, dv) = field.get(u, v).unwrap();
            total += 1;
            if (du, dv) != (-(d as f64), 0.0) {
                // Any miss must still be a perfect-score tie, never a
                // genuinely better wrong match.
                let k = volume.proposals().index_of((-(d as i64), 0)).unwrap();
                let s_true = volume.get(u, v, k);
                let s_won = volume
                    .proposals()
                    .index_of((du as i64, dv as i64))
                    .map(|j| volume.get(u, v, j))
                    .unwrap();
                assert_eq!(s_won, s_true, "pixel ({u},{v}) lost to a higher score");
                wrong += 1;
            }
        }
    }
    assert!(
        wrong * 100 <= total * 5,
        "{wrong}/{total} interior pixels missed the true shift"
    );
}
