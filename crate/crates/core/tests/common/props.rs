//! Randomized invariants, shared by the property tests and the acceptance
//! gate.

use std::path::Path;

use blockseg::cholesky::CholeskyFactor;
use blockseg::gram::{gram_entry, gram_submatrix, ActiveSet};
use blockseg::io::{format_matrix_tsv, parse_matrix_tsv};
use blockseg::lars::{fitted_means, kkt_violation, lars_path, ChangePointSet, LarsConfig};
use blockseg::linops::{apply_design, apply_design_transpose, unvec, vec, FlatVector, ObservationMatrix};
use blockseg::metrics::{hausdorff_parts, roc_from_estimates};
use blockseg::stability::{reconstruct_u, select_positions};
use proptest::collection::vec as pvec;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<(), TestCaseError>;

fn fail(msg: String) -> Check {
    Err(TestCaseError::fail(msg))
}

pub fn square(nmin: usize, nmax: usize) -> impl Strategy<Value = ObservationMatrix> {
    (nmin..=nmax).prop_flat_map(|n| {
        pvec(-5.0..5.0f64, n * n).prop_map(move |d| ObservationMatrix::new(n, d).unwrap())
    })
}

pub fn adjoint_case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=16).prop_flat_map(|n| (pvec(-1.0..1.0f64, n * n), pvec(-1.0..1.0f64, n * n)))
}

pub fn check_adjoint((u, v): (Vec<f64>, Vec<f64>)) -> Check {
    let u = FlatVector::new(u).unwrap();
    let v = FlatVector::new(v).unwrap();
    let lhs = apply_design(&u).unwrap().dot(&v);
    let rhs = u.dot(&apply_design_transpose(&v).unwrap());
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    if (lhs - rhs).abs() > 1e-10 * scale {
        return fail(format!("<Xu,v> = {lhs}, <u,Xᵀv> = {rhs}"));
    }
    Ok(())
}

pub fn check_vec_round_trip(m: ObservationMatrix) -> Check {
    let back = unvec(&vec(&m), m.n()).unwrap();
    prop_assert_eq!(back, m);
    Ok(())
}

/// `(n, ops)`: each op toggles membership of a variable.
pub fn cholesky_case() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (2usize..=12).prop_flat_map(|n| (Just(n), pvec(1..=n * n, 1..=50)))
}

pub fn check_cholesky_sequence((n, ops): (usize, Vec<usize>)) -> Check {
    let mut f = CholeskyFactor::empty(n);
    for j in ops {
        if f.active().contains(j) {
            f.downdate(j).unwrap();
        } else {
            f.extend(j).unwrap();
        }
        if f.order() == 0 {
            continue;
        }
        let g = gram_submatrix(f.active()).unwrap();
        for (a, &b) in f.reconstruct().iter().zip(g.entries()) {
            if (a - b as f64).abs() > 1e-8 {
                return fail(format!("L Lᵀ entry {a} differs from Gram {b}"));
            }
        }
    }
    Ok(())
}

pub fn check_extend_then_drop((n, ops): (usize, Vec<usize>)) -> Check {
    let mut first: Vec<usize> = ops.iter().copied().take(8).collect();
    first.sort_unstable();
    first.dedup();
    let a = ActiveSet::from_indices(n, first).unwrap();
    let mut f = CholeskyFactor::for_set(&a).unwrap();
    let before = f.to_dense();
    let Some(j) = (1..=n * n).rev().find(|j| !a.contains(*j)) else {
        return Ok(());
    };
    f.extend(j).unwrap();
    f.downdate(j).unwrap();
    for (x, y) in f.to_dense().iter().zip(&before) {
        if (x - y).abs() > 1e-10 {
            return fail(format!("factor changed by extend+drop: {x} vs {y}"));
        }
    }
    Ok(())
}

pub fn gram_pair() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=40).prop_flat_map(|n| (Just(n), 1..=n * n, 1..=n * n))
}

pub fn check_gram_symmetry((n, a, b): (usize, usize, usize)) -> Check {
    prop_assert_eq!(gram_entry(a, b, n).unwrap(), gram_entry(b, a, n).unwrap());
    Ok(())
}

pub fn path_case() -> impl Strategy<Value = (ObservationMatrix, usize)> {
    square(2, 8).prop_flat_map(|y| {
        let cap = (y.n() * y.n()).min(30);
        (Just(y), 1..=cap)
    })
}

/// λ strictly decreasing, empty first support, KKT and sign coherence at
/// every breakpoint, and block-constant fitted means.
pub fn check_path((y, s): (ObservationMatrix, usize)) -> Check {
    let n = y.n();
    let path = lars_path(&y, &LarsConfig::new(s)).unwrap();
    prop_assert!(path.first().nonzero().next().is_none());
    for w in path.breakpoints.windows(2) {
        if w[1].lambda.partial_cmp(&w[0].lambda) != Some(std::cmp::Ordering::Less) {
            return fail(format!("λ not decreasing: {} then {}", w[0].lambda, w[1].lambda));
        }
    }
    let tol = 1e-8 * y.max_abs().max(1.0) * n as f64;
    for bp in path.iter() {
        prop_assert_eq!(bp.coeffs.len(), bp.active.len());
        let kkt = kkt_violation(&y, bp);
        if kkt > tol {
            return fail(format!("KKT violation {kkt:e} > {tol:e} at λ = {}", bp.lambda));
        }
        let u = fitted_means(bp);
        let cp = bp.changepoints();
        let block = |bounds: &[usize], p: usize| bounds.iter().take_while(|&&t| t <= p + 1).count();
        for i in 0..n {
            for j in 0..n {
                // Each cell equals the top-left cell of its block.
                let bi = block(&cp.rows, i);
                let bj = block(&cp.cols, j);
                let i0 = if bi == 0 { 0 } else { cp.rows[bi - 1] - 1 };
                let j0 = if bj == 0 { 0 } else { cp.cols[bj - 1] - 1 };
                if (u.get(i, j) - u.get(i0, j0)).abs() > 1e-10 * (1.0 + u.max_abs()) {
                    return fail(format!("fitted means not block-constant at ({i}, {j})"));
                }
            }
        }
    }
    Ok(())
}

pub fn segmentation_case() -> impl Strategy<Value = (ObservationMatrix, ChangePointSet)> {
    square(2, 12).prop_flat_map(|y| {
        let n = y.n();
        (
            Just(y),
            pvec(2..=n, 0..=4),
            pvec(2..=n, 0..=4),
        )
            .prop_map(move |(y, r, c)| {
                let cp = ChangePointSet::new(n, r, c).unwrap();
                (y, cp)
            })
    })
}

pub fn check_projection((y, cp): (ObservationMatrix, ChangePointSet)) -> Check {
    let once = reconstruct_u(&y, &cp).unwrap();
    let twice = reconstruct_u(&once, &cp).unwrap();
    for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
        if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
            return fail(format!("reconstruct_u not idempotent: {a} vs {b}"));
        }
    }
    Ok(())
}

pub fn set_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (pvec(1usize..=200, 1..=12), pvec(1usize..=200, 1..=12))
}

pub fn check_hausdorff((a, b): (Vec<usize>, Vec<usize>)) -> Check {
    let brute = |x: &[usize], y: &[usize]| {
        y.iter()
            .map(|&q| x.iter().map(|&p| p.abs_diff(q)).min().unwrap())
            .max()
            .unwrap() as f64
    };
    let h = hausdorff_parts(&a, &b).unwrap();
    prop_assert_eq!(h.d1, brute(&a, &b));
    prop_assert_eq!(h.d2, brute(&b, &a));
    prop_assert_eq!(h.d, h.d1.max(h.d2));
    let s = hausdorff_parts(&b, &a).unwrap();
    prop_assert_eq!((s.d1, s.d2, s.d), (h.d2, h.d1, h.d));
    Ok(())
}

/// Scores whose support has no two adjacent positions.
pub fn sparse_scores() -> impl Strategy<Value = (Vec<u64>, f64)> {
    (pvec(prop_oneof![Just(0u64), 1u64..100], 2..=60), 0.5f64..=100.0).prop_map(|(mut v, t)| {
        for i in 1..v.len() {
            if v[i - 1] != 0 {
                v[i] = 0;
            }
        }
        (v, t)
    })
}

pub fn check_selection_idempotence((scores, pct): (Vec<u64>, f64)) -> Check {
    let max = scores.iter().copied().max().unwrap_or(0);
    let tau = pct / 100.0 * max as f64;
    let expect: Vec<usize> = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > 0 && s as f64 >= tau)
        .map(|(i, _)| i + 1)
        .collect();
    prop_assert_eq!(select_positions(&scores, pct), expect);
    Ok(())
}

pub fn roc_case() -> impl Strategy<Value = (usize, Vec<usize>, Vec<Vec<usize>>)> {
    (10usize..=60).prop_flat_map(|n| {
        (
            Just(n),
            pvec(2..=n, 1..=5),
            pvec(pvec(2..=n, 0..=10), 0..=8),
        )
    })
}

pub fn check_roc((n, truth, estimates): (usize, Vec<usize>, Vec<Vec<usize>>)) -> Check {
    let roc = roc_from_estimates(estimates.iter().map(|e| e.as_slice()), &truth, n, 2).unwrap();
    prop_assert!((0.0..=1.0).contains(&roc.auc));
    for w in roc.points.windows(2) {
        prop_assert!(w[0].0 <= w[1].0 && w[0].1 <= w[1].1);
    }
    let perfect = roc_from_estimates([truth.as_slice()], &truth, n, 0).unwrap();
    prop_assert_eq!(perfect.auc, 1.0);
    Ok(())
}

pub fn finite_matrix() -> impl Strategy<Value = ObservationMatrix> {
    (2usize..=6).prop_flat_map(|n| {
        pvec(
            prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
            n * n,
        )
        .prop_map(move |d| ObservationMatrix::new(n, d).unwrap())
    })
}

pub fn check_tsv_round_trip(m: ObservationMatrix) -> Check {
    let back = parse_matrix_tsv(&format_matrix_tsv(&m), Path::new("m.tsv")).unwrap();
    prop_assert_eq!(back, m);
    Ok(())
}

/// Runs one property for `cases` cases with a fixed seed.
pub fn run<S: Strategy>(
    cases: u32,
    strategy: S,
    check: impl Fn(S::Value) -> Check,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        ..Config::default()
    };
    let mut runner = TestRunner::new(config);
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

/// Every property suite, by name.
pub fn all_suites(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        ("adjointness", run(cases, adjoint_case(), check_adjoint)),
        ("vec/unvec round trip", run(cases, square(2, 10), check_vec_round_trip)),
        ("Cholesky extend/drop sequences", run(cases, cholesky_case(), check_cholesky_sequence)),
        ("Cholesky extend then drop", run(cases, cholesky_case(), check_extend_then_drop)),
        ("Gram symmetry", run(cases, gram_pair(), check_gram_symmetry)),
        ("path monotonicity and KKT", run(cases, path_case(), check_path)),
        ("reconstruct_u projection", run(cases, segmentation_case(), check_projection)),
        ("Hausdorff brute force", run(cases, set_pair(), check_hausdorff)),
        ("selection idempotence", run(cases, sparse_scores(), check_selection_idempotence)),
        ("ROC bounds", run(cases, roc_case(), check_roc)),
        ("TSV round trip", run(cases, finite_matrix(), check_tsv_round_trip)),
    ]
}
