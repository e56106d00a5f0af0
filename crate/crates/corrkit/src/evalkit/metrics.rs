//! Dense field metrics over jointly valid pixels.
//!
//! Accumulation is sequential in row-major order, matching a plain
//! reference loop term for term, so oracle comparisons can demand exact
//! equality rather than tolerances.

use crate::core::{DepthMap, DisplacementField};
use crate::error::{Error, Result};

use super::report::{MetricReport, MetricUnit};

fn check_same_dims(est: &DisplacementField, gt: &DisplacementField) -> Result<()> {
    if (est.width(), est.height()) != (gt.width(), gt.height()) {
        return Err(Error::InvalidArgument(format!(
            "estimate {}x{} and ground truth {}x{} differ in size",
            est.width(),
            est.height(),
            gt.width(),
            gt.height()
        )));
    }
    Ok(())
}

/// Walks jointly valid pixels row-major, handing each (estimate, truth)
/// displacement pair to the accumulator. Returns the pair count.
fn for_joint_valid<F>(est: &DisplacementField, gt: &DisplacementField, mut f: F) -> usize
where
    F: FnMut((f64, f64), (f64, f64)),
{
    let mut count = 0;
    for v in 0..est.height() {
        for u in 0..est.width() {
            let (Some(e), Some(g)) = (est.get(u, v), gt.get(u, v)) else { continue };
            f(e, g);
            count += 1;
        }
    }
    count
}

fn no_overlap() -> Error {
    Error::Evaluation("no jointly valid pixels to evaluate".into())
}

/// Mean Euclidean endpoint error in pixels over jointly valid pixels.
pub fn epe(est: &DisplacementField, gt: &DisplacementField) -> Result<MetricReport> {
    check_same_dims(est, gt)?;
    let mut sum = 0.0;
    let count = for_joint_valid(est, gt, |(eu, ev), (gu, gv)| {
        sum += ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt();
    });
    if count == 0 {
        return Err(no_overlap());
    }
    MetricReport::new("epe", sum / count as f64, MetricUnit::Pixels, count)
}

/// Percentage of jointly valid pixels with endpoint error above `tau`.
/// The complementary accuracy is `100 - bad_tau`.
pub fn bad_tau(est: &DisplacementField, gt: &DisplacementField, tau: f64) -> Result<MetricReport> {
    check_same_dims(est, gt)?;
    if !(tau >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad-tau threshold {tau} must be nonnegative"
        )));
    }
    let mut bad = 0usize;
    let count = for_joint_valid(est, gt, |(eu, ev), (gu, gv)| {
        let err = ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt();
        if err > tau {
            bad += 1;
        }
    });
    if count == 0 {
        return Err(no_overlap());
    }
    let name = if tau == tau.trunc() && tau >= 0.0 && tau < 1e6 {
        format!("bad{}", tau as i64)
    } else {
        format!("bad{tau}")
    };
    MetricReport::new(name, 100.0 * bad as f64 / count as f64, MetricUnit::Percent, count)
}

/// KITTI outlier percentage: a pixel is an outlier iff its endpoint error
/// exceeds 3 px AND 5% of the ground-truth magnitude. Works for flow and,
/// via [`crate::geometry::disparity_to_flow`], for disparity, where the
/// magnitude reduces to |d|.
pub fn d1_f1_all(est: &DisplacementField, gt: &DisplacementField) -> Result<MetricReport> {
    check_same_dims(est, gt)?;
    let mut outliers = 0usize;
    let count = for_joint_valid(est, gt, |(eu, ev), (gu, gv)| {
        let err = ((eu - gu).powi(2) + (ev - gv).powi(2)).sqrt();
        let mag = (gu.powi(2) + gv.powi(2)).sqrt();
        if err > 3.0 && err > 0.05 * mag {
            outliers += 1;
        }
    });
    if count == 0 {
        return Err(no_overlap());
    }
    MetricReport::new("d1_all", 100.0 * outliers as f64 / count as f64, MetricUnit::Percent, count)
}

/// AbsRel, SqRel, RMSE, and RMSE in log scale over jointly valid pixels.
/// Valid depths are positive by construction, so logs are always defined.
pub fn depth_metrics(est: &DepthMap, gt: &DepthMap) -> Result<[MetricReport; 4]> {
    if (est.width(), est.height()) != (gt.width(), gt.height()) {
        return Err(Error::InvalidArgument(format!(
            "estimate {}x{} and ground truth {}x{} differ in size",
            est.width(),
            est.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut abs_rel = 0.0;
    let mut sq_rel = 0.0;
    let mut sq = 0.0;
    let mut sq_log = 0.0;
    let mut count = 0usize;
    for v in 0..est.height() {
        for u in 0..est.width() {
            let (Some(ze), Some(zg)) = (est.get(u, v), gt.get(u, v)) else { continue };
            let d = ze - zg;
            abs_rel += d.abs() / zg;
            sq_rel += d * d / zg;
            sq += d * d;
            let dl = ze.ln() - zg.ln();
            sq_log += dl * dl;
            count += 1;
        }
    }
    if count == 0 {
        return Err(no_overlap());
    }
    let n = count as f64;
    Ok([
        MetricReport::new("abs_rel", abs_rel / n, MetricUnit::Dimensionless, count)?,
        MetricReport::new("sq_rel", sq_rel / n, MetricUnit::SceneUnits, count)?,
        MetricReport::new("rmse", (sq / n).sqrt(), MetricUnit::SceneUnits, count)?,
        MetricReport::new("rmse_log", (sq_log / n).sqrt(), MetricUnit::Dimensionless, count)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::DepthVariant;

    fn field(vals: &[((usize, usize), (f64, f64))], w: usize, h: usize) -> DisplacementField {
        DisplacementField::from_fn(w, h, |u, v| {
            vals.iter().find(|(p, _)| *p == (u, v)).map(|&(_, d)| d)
        })
        .unwrap()
    }

    #[test]
    fn epe_zero_on_equal_fields() {
        let f = DisplacementField::filled(4, 4, 1.0, -2.0).unwrap();
        let r = epe(&f, &f).unwrap();
        assert_eq!(r.value(), 0.0);
        assert_eq!(r.count(), 16);
    }

    #[test]
    fn epe_three_four_five() {
        let est = field(&[((0, 0), (3.0, 4.0))], 1, 1);
        let gt = field(&[((0, 0), (0.0, 0.0))], 1, 1);
        assert_eq!(epe(&est, &gt).unwrap().value(), 5.0);
    }

    #[test]
    fn epe_requires_overlap() {
        let est = field(&[((0, 0), (1.0, 0.0))], 2, 1);
        let gt = field(&[((1, 0), (1.0, 0.0))], 2, 1);
        assert!(matches!(epe(&est, &gt), Err(Error::Evaluation(_))));
    }

    #[test]
    fn bad_tau_counts_one_of_four() {
        let gt = DisplacementField::filled(2, 2, 0.0, 0.0).unwrap();
        let est = DisplacementField::from_fn(2, 2, |u, v| {
            Some(if (u, v) == (1, 1) { (10.0, 0.0) } else { (0.0, 0.0) })
        })
        .unwrap();
        let r = bad_tau(&est, &gt, 3.0).unwrap();
        assert_eq!(r.value(), 25.0);
        assert_eq!(r.name(), "bad3");
        assert!(bad_tau(&est, &gt, -1.0).is_err());
    }

    #[test]
    fn d1_conjunction_rule() {
        // 4 px error at magnitude 100: only 4%, not an outlier.
        let gt_big = field(&[((0, 0), (100.0, 0.0))], 1, 1);
        let est_big = field(&[((0, 0), (104.0, 0.0))], 1, 1);
        assert_eq!(d1_f1_all(&est_big, &gt_big).unwrap().value(), 0.0);
        // Same 4 px error at magnitude 10: 40%, both clauses hold.
        let gt_small = field(&[((0, 0), (10.0, 0.0))], 1, 1);
        let est_small = field(&[((0, 0), (14.0, 0.0))], 1, 1);
        assert_eq!(d1_f1_all(&est_small, &gt_small).unwrap().value(), 100.0);
        // 2 px error never qualifies regardless of magnitude.
        let est_two = field(&[((0, 0), (12.0, 0.0))], 1, 1);
        assert_eq!(d1_f1_all(&est_two, &gt_small).unwrap().value(), 0.0);
    }

    #[test]
    fn depth_fixture_values() {
        let est = DepthMap::from_fn(1, 1, DepthVariant::Source, |_, _| Some(2.0)).unwrap();
        let gt = DepthMap::from_fn(1, 1, DepthVariant::Source, |_, _| Some(1.0)).unwrap();
        let [abs_rel, sq_rel, rmse, rmse_log] = depth_metrics(&est, &gt).unwrap();
        assert_eq!(abs_rel.value(), 1.0);
        assert_eq!(sq_rel.value(), 1.0);
        assert_eq!(rmse.value(), 1.0);
        assert!((rmse_log.value() - 2.0_f64.ln()).abs() < 1e-15);
        let [a, s, r, l] = depth_metrics(&gt, &gt).unwrap();
        for m in [a, s, r, l] {
            assert_eq!(m.value(), 0.0);
        }
    }

    #[test]
    fn dim_mismatch_rejected() {
        let a = DisplacementField::filled(2, 2, 0.0, 0.0).unwrap();
        let b = DisplacementField::filled(3, 2, 0.0, 0.0).unwrap();
        assert!(epe(&a, &b).is_err());
        assert!(bad_tau(&a, &b, 1.0).is_err());
        assert!(d1_f1_all(&a, &b).is_err());
    }
}
