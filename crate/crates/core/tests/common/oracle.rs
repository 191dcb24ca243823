//! Comparisons against the dense reference implementations.

use blockseg::gram::{gram_submatrix, ActiveSet};
use blockseg::lars::{kkt_violation, lars_path, LarsConfig};
use blockseg::linops::{apply_design, apply_design_transpose, vec, FlatVector, ObservationMatrix};
use blockseg::oracle::{lasso_oracle_from, materialize_design};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random active set of size 1..=min(10, n²).
pub fn random_active_set(rng: &mut ChaCha8Rng, n: usize) -> ActiveSet {
    let k = rng.random_range(1..=10.min(n * n));
    let idx = rand::seq::index::sample(rng, n * n, k);
    ActiveSet::from_indices(n, idx.into_iter().map(|i| i + 1)).unwrap()
}

/// Exact Gram equality plus dense/implicit products for `sets` random
/// active sets spread over `n ∈ 2..=12`. Returns the largest product error.
pub fn structure_check(sets: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let designs: Vec<_> = (2..=12).map(|n| materialize_design(n).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for t in 0..sets {
        let n = 2 + t % 11;
        let dense = &designs[n - 2];
        let a = random_active_set(&mut rng, n);
        let g = gram_submatrix(&a).map_err(|e| e.to_string())?;
        if g.entries() != dense.gram(a.indices()).as_slice() {
            return Err(format!("Gram mismatch for n={n}, A={:?}", a.indices()));
        }
        let v: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fv = FlatVector::new(v.clone()).unwrap();
        for (got, want) in [
            (apply_design(&fv).unwrap(), dense.mul(&v)),
            (apply_design_transpose(&fv).unwrap(), dense.mul_transpose(&v)),
        ] {
            for (x, y) in got.as_slice().iter().zip(&want) {
                let err = (x - y).abs();
                worst = worst.max(err);
                if err > 1e-12 * (1.0 + y.abs()) {
                    return Err(format!("product mismatch n={n}: {x} vs {y}"));
                }
            }
        }
    }
    Ok(worst)
}

pub struct PathAgreement {
    pub breakpoints: usize,
    pub max_coeff_error: f64,
    pub max_kkt: f64,
}

/// Runs the path on a random `n × n` instance and compares every breakpoint
/// with the coordinate-descent oracle at penalty `2λ`.
pub fn path_vs_oracle(n: usize, s: usize, seed: u64) -> Result<PathAgreement, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = ObservationMatrix::from_fn(n, |_, _| rng.random_range(-2.0..2.0)).unwrap();
    let path = lars_path(&y, &LarsConfig::new(s)).map_err(|e| e.to_string())?;
    let design = materialize_design(n).unwrap();
    let yv = vec(&y);
    let tol = 1e-8 * y.max_abs().max(1.0) * n as f64;
    let mut out = PathAgreement {
        breakpoints: path.len(),
        max_coeff_error: 0.0,
        max_kkt: 0.0,
    };
    let mut warm: Option<Vec<f64>> = None;
    for bp in path.iter() {
        let kkt = kkt_violation(&y, bp);
        out.max_kkt = out.max_kkt.max(kkt);
        if kkt > tol {
            return Err(format!("KKT violation {kkt:e} at λ={}", bp.lambda));
        }
        let oracle = lasso_oracle_from(&design, &yv, bp.criterion_penalty(), warm.as_deref())
            .map_err(|e| e.to_string())?;
        let ours = bp.dense_coeffs();
        for (j, (a, b)) in ours.as_slice().iter().zip(oracle.as_slice()).enumerate() {
            let err = (a - b).abs();
            out.max_coeff_error = out.max_coeff_error.max(err);
            if err > 1e-6 {
                return Err(format!(
                    "coefficient {} differs at λ={}: path {a}, oracle {b}",
                    j + 1,
                    bp.lambda
                ));
            }
        }
        warm = Some(oracle.into_inner());
    }
    Ok(out)
}
