//! ROC curves along a path and Hausdorff distances between boundary sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lars::{Axis, ChangePointSet, PathRecord};

/// Default half-width of the window in which an estimate matches a true boundary.
pub const DEFAULT_MATCH_TOL: usize = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(FPR, TPR)` pairs, nondecreasing in both coordinates, from `(0, 0)`
    /// to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn within(sorted: &[usize], t: usize, tol: usize) -> bool {
    let lo = t.saturating_sub(tol);
    let i = sorted.partition_point(|&x| x < lo);
    sorted.get(i).is_some_and(|&x| x <= t + tol)
}

/// `(FPR, TPR)` of one estimated boundary set.
pub fn roc_point(estimate: &[usize], truth: &[usize], n: usize, match_tol: usize) -> Result<(f64, f64)> {
    if truth.is_empty() {
        return Err(Error::Argument("ROC needs at least one true boundary".into()));
    }
    let negatives = (n - 1).saturating_sub(truth.len());
    let mut est = estimate.to_vec();
    est.sort_unstable();
    est.dedup();
    let tp = truth.iter().filter(|&&t| within(&est, t, match_tol)).count();
    let fp = est.iter().filter(|&&e| !within(truth, e, match_tol)).count();
    let tpr = tp as f64 / truth.len() as f64;
    let fpr = if negatives == 0 {
        0.0
    } else {
        (fp as f64 / negatives as f64).min(1.0)
    };
    Ok((fpr, tpr))
}

/// Builds the staircase over a sequence of estimates and integrates it.
pub fn roc_from_estimates<'a>(
    estimates: impl IntoIterator<Item = &'a [usize]>,
    truth: &[usize],
    n: usize,
    match_tol: usize,
) -> Result<RocCurve> {
    let mut truth = truth.to_vec();
    truth.sort_unstable();
    truth.dedup();
    let mut points = vec![(0.0, 0.0)];
    for est in estimates {
        points.push(roc_point(est, &truth, n, match_tol)?);
    }
    if truth.is_empty() {
        return Err(Error::Argument("ROC needs at least one true boundary".into()));
    }
    points.push((1.0, 1.0));
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut best = 0.0f64;
    for p in &mut points {
        best = best.max(p.1);
        p.1 = best;
    }
    points.dedup();
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// ROC curve of one axis, sweeping the breakpoints of `path` from `λ_max` down.
pub fn roc_from_path(
    path: &PathRecord,
    truth: &ChangePointSet,
    axis: Axis,
    match_tol: usize,
) -> Result<RocCurve> {
    let estimates: Vec<ChangePointSet> = path.iter().map(|bp| bp.changepoints()).collect();
    roc_from_estimates(
        estimates.iter().map(|cp| cp.axis(axis)),
        truth.axis(axis),
        path.n,
        match_tol,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HausdorffParts {
    pub d1: f64,
    pub d2: f64,
    pub d: f64,
}

// max over b of the distance to the nearest element of a; both sorted.
fn directed(a: &[usize], b: &[usize]) -> usize {
    let mut i = 0;
    let mut worst = 0;
    for &x in b {
        while i + 1 < a.len() && a[i + 1] <= x {
            i += 1;
        }
        let mut d = a[i].abs_diff(x);
        if i + 1 < a.len() {
            d = d.min(a[i + 1].abs_diff(x));
        }
        worst = worst.max(d);
    }
    worst
}

/// `d1(a, b) = max_{b} min_{a} |a − b|`, `d2(a, b) = d1(b, a)` and their maximum.
pub fn hausdorff_parts(a: &[usize], b: &[usize]) -> Result<HausdorffParts> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("Hausdorff distance of an empty set".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let d1 = directed(&a, &b) as f64;
    let d2 = directed(&b, &a) as f64;
    Ok(HausdorffParts { d1, d2, d: d1.max(d2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hausdorff_example() {
        let h = hausdorff_parts(&[1, 10], &[4]).unwrap();
        assert_eq!((h.d1, h.d2, h.d), (3.0, 6.0, 6.0));
        let s = hausdorff_parts(&[4], &[1, 10]).unwrap();
        assert_eq!((s.d1, s.d2, s.d), (6.0, 3.0, 6.0));
        let z = hausdorff_parts(&[2, 5, 9], &[2, 5, 9]).unwrap();
        assert_eq!(z.d, 0.0);
        assert!(hausdorff_parts(&[], &[1]).is_err());
    }

    #[test]
    fn exact_truth_first_gives_unit_auc() {
        let truth = [21, 41, 61, 81];
        let roc = roc_from_estimates([&truth[..], &[5, 21, 41, 61, 81][..]], &truth, 100, 2).unwrap();
        assert_eq!(roc.auc, 1.0);
    }

    #[test]
    fn empty_output_is_the_diagonal() {
        let roc = roc_from_estimates([&[][..]], &[21, 41], 100, 2).unwrap();
        assert!((roc.auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn match_window() {
        let (fpr, tpr) = roc_point(&[19, 44, 70], &[21, 41, 61, 81], 100, 2).unwrap();
        assert_eq!(tpr, 0.25);
        assert!((fpr - 2.0 / 95.0).abs() < 1e-15);
    }

    #[test]
    fn empty_truth_is_rejected() {
        assert!(roc_from_estimates([&[3][..]], &[], 10, 2).is_err());
    }
}
