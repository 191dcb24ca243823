//! Replicated benchmark runs: AUC batches and timing scans.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lars::{lars_path, Axis, LarsConfig};
use crate::metrics::{roc_from_path, RocCurve};
use crate::simgen::{generate, generate_checkerboard_k, Scenario};

/// Seed of replicate `r` in a batch started from `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add(r as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AucBatchConfig {
    pub scenario: u8,
    pub n: usize,
    pub sigma: f64,
    pub replicates: usize,
    /// Active-variable budget of each path.
    pub s: usize,
    pub match_tol: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct ReplicateRoc {
    pub seed: u64,
    pub rows: RocCurve,
    pub cols: RocCurve,
}

/// Fits one simulated replicate and returns its row and column ROC curves.
pub fn replicate_roc(cfg: &AucBatchConfig, r: usize) -> Result<ReplicateRoc> {
    let seed = replicate_seed(cfg.seed, r);
    let data = generate(&Scenario::new(cfg.scenario, cfg.n, cfg.sigma, seed))?;
    let path = lars_path(&data.y, &LarsConfig::new(cfg.s))?;
    Ok(ReplicateRoc {
        seed,
        rows: roc_from_path(&path, &data.truth, Axis::Rows, cfg.match_tol)?,
        cols: roc_from_path(&path, &data.truth, Axis::Cols, cfg.match_tol)?,
    })
}

/// All replicates of a batch, in replicate order (computed in parallel).
pub fn auc_batch(cfg: &AucBatchConfig) -> Result<Vec<ReplicateRoc>> {
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| replicate_roc(cfg, r))
        .collect()
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (m, v.sqrt())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Argument(
            "slope needs at least two points with positive coordinates".into(),
        ));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, _) = mean_sd(&lx);
    let (my, _) = mean_sd(&ly);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("slope needs at least two distinct x values".into()));
    }
    Ok(sxy / sxx)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        (xs[k / 2 - 1] + xs[k / 2]) / 2.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub warmup: usize,
    pub reps: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            warmup: 2,
            reps: 4,
            sigma: 1.0,
            seed: 0,
        }
    }
}

/// Median wall-clock seconds of `lars_path` with budget `s` on an `n × n`
/// noisy checkerboard. Warm-up runs are discarded.
pub fn time_fit(n: usize, s: usize, cfg: &TimingConfig) -> Result<f64> {
    if cfg.reps == 0 {
        return Err(Error::Argument("timing needs at least one repetition".into()));
    }
    let k = ((s as f64).sqrt().ceil() as usize).saturating_sub(1).clamp(1, n / 2 - 1);
    let data = generate_checkerboard_k(n, k, cfg.sigma, cfg.seed)?;
    let lcfg = LarsConfig::new(s);
    for _ in 0..cfg.warmup {
        lars_path(&data.y, &lcfg)?;
    }
    let mut times = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let start = Instant::now();
        let path = lars_path(&data.y, &lcfg)?;
        times.push(start.elapsed().as_secs_f64());
        std::hint::black_box(path);
    }
    Ok(median(times))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_err());
    }

    #[test]
    fn mean_and_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
        assert_eq!(median(vec![3.0, 1.0, 2.0, 10.0]), 2.5);
    }

    #[test]
    fn small_batch_is_reproducible() {
        let cfg = AucBatchConfig {
            scenario: 1,
            n: 20,
            sigma: 0.5,
            replicates: 3,
            s: 30,
            match_tol: 2,
            seed: 4,
        };
        let a: Vec<f64> = auc_batch(&cfg).unwrap().iter().map(|r| r.rows.auc).collect();
        let b: Vec<f64> = auc_batch(&cfg).unwrap().iter().map(|r| r.rows.auc).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
