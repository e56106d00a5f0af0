//! Metric oracles, cycle filtering, and fundamental-matrix estimation on
//! synthetic data.

use corrkit::core::{DepthMap, DepthVariant, DisplacementField};
use corrkit::evalkit::{
    bad_tau, cycle_consistency, d1_f1_all, depth_metrics, epe, estimate_fundamental,
    maa_epipolar, sample_bilinear, FundamentalMatrix, RansacParams,
};
use corrkit::synth::{
    epipolar_match_set, inject_outliers, occlusion_flow_scene, random_camera_pair,
    random_displacement_field, translation_flow_pair,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn joint_pixels<'a>(
    a: &'a DisplacementField,
    b: &'a DisplacementField,
) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + 'a {
    (0..a.height())
        .flat_map(move |v| (0..a.width()).map(move |u| (u, v)))
        .filter_map(move |(u, v)| Some((a.get(u, v)?, b.get(u, v)?)))
}

#[test]
fn flow_metrics_equal_naive_loops_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..40 {
        let w = rng.gen_range(1..64);
        let h = rng.gen_range(1..64);
        let est = random_displacement_field(&mut rng, w, h, 12.0, 0.2).unwrap();
        let gt = random_displacement_field(&mut rng, w, h, 12.0, 0.2).unwrap();
        if joint_pixels(&est, &gt).next().is_none() {
            assert!(epe(&est, &gt).is_err());
            continue;
        }

        let mut sum = 0.0;
        let mut n = 0usize;
        for ((eu, ev), (gu, gv)) in joint_pixels(&est, &gt) {
            sum += ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt();
            n += 1;
        }
        let report = epe(&est, &gt).unwrap();
        assert_eq!(report.value(), sum / n as f64);
        assert_eq!(report.count(), n);

        for tau in [0.5, 1.0, 3.0] {
            let mut bad = 0usize;
            for ((eu, ev), (gu, gv)) in joint_pixels(&est, &gt) {
                if ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt() > tau {
                    bad += 1;
                }
            }
            let report = bad_tau(&est, &gt, tau).unwrap();
            assert_eq!(report.value(), 100.0 * bad as f64 / n as f64);
        }

        let mut outliers = 0usize;
        for ((eu, ev), (gu, gv)) in joint_pixels(&est, &gt) {
            let err = ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt();
            if err > 3.0 && err > 0.05 * (gu.powi(2) + gv.powi(2)).sqrt() {
                outliers += 1;
            }
        }
        let report = d1_f1_all(&est, &gt).unwrap();
        assert_eq!(report.value(), 100.0 * outliers as f64 / n as f64);
    }
}

#[test]
fn depth_metrics_equal_naive_loops_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..30 {
        let w = rng.gen_range(1..48);
        let h = rng.gen_range(1..48);
        let mk = |rng: &mut ChaCha8Rng| {
            DepthMap::from_fn(w, h, DepthVariant::Source, |_, _| {
                if rng.gen_bool(0.15) {
                    None
                } else {
                    Some(rng.gen_range(0.5..40.0))
                }
            })
            .unwrap()
        };
        let est = mk(&mut rng);
        let gt = mk(&mut rng);
        let pairs: Vec<(f64, f64)> = (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .filter_map(|(u, v)| Some((est.get(u, v)?, gt.get(u, v)?)))
            .collect();
        if pairs.is_empty() {
            assert!(depth_metrics(&est, &gt).is_err());
            continue;
        }
        let n = pairs.len() as f64;
        let abs_rel: f64 = pairs.iter().map(|(e, g)| (e - g).abs() / g).sum::<f64>() / n;
        let sq_rel: f64 = pairs.iter().map(|(e, g)| (e - g).powi(2) / g).sum::<f64>() / n;
        let rmse: f64 = (pairs.iter().map(|(e, g)| (e - g).powi(2)).sum::<f64>() / n).sqrt();
        let rmse_log: f64 =
            (pairs.iter().map(|(e, g)| (e.ln() - g.ln()).powi(2)).sum::<f64>() / n).sqrt();
        let [r_abs, r_sq, r_rmse, r_log] = depth_metrics(&est, &gt).unwrap();
        assert_eq!(r_abs.value(), abs_rel);
        assert_eq!(r_sq.value(), sq_rel);
        assert_eq!(r_rmse.value(), rmse);
        assert_eq!(r_log.value(), rmse_log);
    }
}

#[test]
fn bad_tau_is_monotone_in_tau() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..30 {
        let est = random_displacement_field(&mut rng, 20, 15, 10.0, 0.1).unwrap();
        let gt = random_displacement_field(&mut rng, 20, 15, 10.0, 0.1).unwrap();
        let mut last = f64::INFINITY;
        for tau in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0] {
            let v = bad_tau(&est, &gt, tau).unwrap().value();
            assert!(v <= last + 1e-12, "tau {tau}: {v} > {last}");
            last = v;
        }
    }
}

#[test]
fn cycle_filter_is_symmetric_on_invertible_fields() {
    let (fwd, bwd) = translation_flow_pair(24, 18, (3.0, -2.0)).unwrap();
    let cf = cycle_consistency(&fwd, &bwd, 1.0);
    let cb = cycle_consistency(&bwd, &fwd, 1.0);
    for v in 0..18usize {
        for u in 0..24usize {
            // Forward pixel (u, v) lands at (u+3, v-2); the mirrored pixel
            // in the backward run is that landing point.
            let (tu, tv) = (u as i64 + 3, v as i64 - 2);
            if tu < 0 || tv < 0 || tu >= 24 || tv >= 18 {
                continue;
            }
            assert_eq!(
                cf.get(u, v) > 0.5,
                cb.get(tu as usize, tv as usize) > 0.5,
                "pixel ({u},{v})"
            );
        }
    }
}

#[test]
fn occlusion_scene_is_rejected_only_where_occluded() {
    let scene = occlusion_flow_scene(64, 64, (12, 12, 20), (9, 6)).unwrap();
    let conf = cycle_consistency(&scene.fwd, &scene.bwd, 1.0);
    let mut occ_total = 0usize;
    let mut occ_rejected = 0usize;
    let mut vis_total = 0usize;
    let mut vis_accepted = 0usize;
    for v in 0..64usize {
        for u in 0..64usize {
            let confident = conf.get(u, v) > 0.5;
            if scene.occluded[v * 64 + u] {
                occ_total += 1;
                occ_rejected += usize::from(!confident);
            } else {
                vis_total += 1;
                vis_accepted += usize::from(confident);
            }
        }
    }
    assert!(occ_total > 0 && vis_total > 0);
    assert!(
        occ_rejected * 100 >= occ_total * 99,
        "{occ_rejected}/{occ_total} occluded pixels rejected"
    );
    assert!(
        vis_accepted * 100 >= vis_total * 99,
        "{vis_accepted}/{vis_total} visible pixels accepted"
    );
}

#[test]
fn bilinear_samples_blend_neighboring_flow() {
    let field = DisplacementField::from_fn(3, 3, |u, v| Some((u as f64, v as f64))).unwrap();
    let (du, dv) = sample_bilinear(&field, 0.5, 1.25).unwrap();
    assert!((du - 0.5).abs() < 1e-12);
    assert!((dv - 1.25).abs() < 1e-12);
    assert!(sample_bilinear(&field, -0.1, 0.0).is_none());
    assert!(sample_bilinear(&field, 2.0 + 1e-9, 0.0).is_none());
}

#[test]
fn noise_free_matches_recover_the_epipolar_geometry() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    for seed in 0..50u64 {
        let (c1, c2) = random_camera_pair(&mut rng, (64, 64));
        let Ok(matches) = epipolar_match_set(&mut rng, &c1, &c2, (64, 64), 200) else {
            // A hostile pose can fail to land enough correspondences; the
            // generator reports that rather than looping forever.
            continue;
        };
        let params = RansacParams {
            iters: 300,
            inlier_tau: 1.0,
            seed,
        };
        let (f, mask) = estimate_fundamental(&matches, &params).unwrap();
        let inliers = mask.iter().filter(|&&b| b).count();
        assert!(
            inliers * 100 >= matches.matches().len() * 99,
            "seed {seed}: {inliers} inliers"
        );
        let max_sampson = matches
            .matches()
            .iter()
            .map(|m| f.sampson_distance((m.u1, m.v1), (m.u2, m.v2)))
            .fold(0.0f64, f64::max);
        assert!(max_sampson < 1e-6, "seed {seed}: max Sampson {max_sampson}");

        // Same seed, same answer.
        let (f2, mask2) = estimate_fundamental(&matches, &params).unwrap();
        assert_eq!(f.matrix(), f2.matrix());
        assert_eq!(mask, mask2);
    }
}

#[test]
fn outlier_contamination_recovers_true_inliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    let mut recalls = Vec::new();
    for seed in 0..50u64 {
        let (c1, c2) = random_camera_pair(&mut rng, (64, 64));
        let Ok(matches) = epipolar_match_set(&mut rng, &c1, &c2, (64, 64), 150) else {
            continue;
        };
        let (dirty, truth) = inject_outliers(&mut rng, &matches, 0.3).unwrap();
        let params = RansacParams {
            iters: 600,
            inlier_tau: 1.0,
            seed: seed + 1,
        };
        let (_, mask) = estimate_fundamental(&dirty, &params).unwrap();
        let true_inliers = truth.iter().filter(|&&b| b).count();
        let recovered = truth
            .iter()
            .zip(&mask)
            .filter(|(&t, &m)| t && m)
            .count();
        recalls.push((recovered, true_inliers));
    }
    assert!(recalls.len() >= 40, "only {} usable scenes", recalls.len());
    for (i, &(rec, tot)) in recalls.iter().enumerate() {
        assert!(
            rec * 100 >= tot * 95,
            "scene {i}: recall {rec}/{tot}"
        );
    }
}

#[test]
fn exact_matches_score_perfect_epipolar_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (c1, c2) = random_camera_pair(&mut rng, (64, 64));
    let matches = epipolar_match_set(&mut rng, &c1, &c2, (64, 64), 120).unwrap();
    let f = FundamentalMatrix::from_cameras(&c1, &c2).unwrap();
    let report = maa_epipolar(&matches, &f, 10).unwrap();
    assert_eq!(report.value(), 100.0);

    // Counting oracle on perturbed matches.
    let mut dirty = matches.matches().to_vec();
    let mut prng = ChaCha8Rng::seed_from_u64(401);
    for m in dirty.iter_mut() {
        m.u2 = (m.u2 + prng.gen_range(-8.0..8.0)).clamp(0.0, 63.9);
        m.v2 = (m.v2 + prng.gen_range(-8.0..8.0)).clamp(0.0, 63.9);
    }
    let dirty = corrkit::core::MatchSet::new((64, 64), (64, 64), dirty).unwrap();
    let mut acc = 0.0;
    for t in 1..=10 {
        let hits = dirty
            .matches()
            .iter()
            .filter(|m| f.sampson_distance((m.u1, m.v1), (m.u2, m.v2)) < t as f64)
            .count();
        acc += hits as f64 / dirty.matches().len() as f64;
    }
    let want = 100.0 * acc / 10.0;
    let got = maa_epipolar(&dirty, &f, 10).unwrap().value();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
}
