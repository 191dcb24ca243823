//! Choosing the final boundaries by stability selection.
//!
//! Each of `M` resamples keeps `⌊n/2⌋` random rows and `⌊n/2⌋` random
//! columns, runs the path until `k_max²` variables are active and credits
//! every boundary of the last breakpoint back to the original matrix. The
//! boundary at subsample position `p` is credited to the original index of
//! the `p`-th smallest sampled row (or column). Positions appearing through
//! several active variables are credited once per variable.
//!
//! Resample `m` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to
//! stream `m`, so the scores do not depend on how the resamples are
//! scheduled across threads.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lars::{lars_path, ChangePointSet, LarsConfig};
use crate::linops::ObservationMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Upper bound on the number of boundaries per axis; each fit keeps
    /// `k_max²` active variables.
    pub k_max: usize,
    /// Number of resamples `M`.
    pub resamples: usize,
    /// Selection threshold in percent of the largest score.
    pub threshold_pct: f64,
    pub seed: u64,
}

impl SelectionConfig {
    pub fn new(k_max: usize, resamples: usize, threshold_pct: f64, seed: u64) -> Self {
        Self {
            k_max,
            resamples,
            threshold_pct,
            seed,
        }
    }

    /// Active-variable budget of each fit.
    pub fn budget(&self) -> usize {
        self.k_max * self.k_max
    }
}

/// Accumulated boundary counts; index `t − 1` holds the score of position `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityScores {
    pub row_scores: Vec<u64>,
    pub col_scores: Vec<u64>,
    pub resamples: usize,
    pub budget: usize,
    pub seed: u64,
}

impl StabilityScores {
    pub fn n(&self) -> usize {
        self.row_scores.len()
    }
}

fn check_threshold(pct: f64) -> Result<()> {
    if !(pct > 0.0 && pct <= 100.0) {
        return Err(Error::Argument(format!("threshold must be in (0, 100], got {pct}")));
    }
    Ok(())
}

/// The RNG of resample `m`.
pub fn resample_rng(seed: u64, m: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(m as u64);
    rng
}

/// Sorted 0-based rows and columns kept by resample `m`.
pub fn resample_indices(n: usize, seed: u64, m: usize) -> (Vec<usize>, Vec<usize>) {
    let half = n / 2;
    let mut rng = resample_rng(seed, m);
    let mut rows = sample(&mut rng, n, half).into_vec();
    let mut cols = sample(&mut rng, n, half).into_vec();
    rows.sort_unstable();
    cols.sort_unstable();
    (rows, cols)
}

fn score_one(y: &ObservationMatrix, budget: usize, seed: u64, m: usize) -> Result<(Vec<u64>, Vec<u64>)> {
    let n = y.n();
    let (rows, cols) = resample_indices(n, seed, m);
    let sub = y.submatrix(&rows, &cols)?;
    let path = lars_path(&sub, &LarsConfig::new(budget))?;
    let mut row_hits = vec![0u64; n];
    let mut col_hits = vec![0u64; n];
    for &(q, r) in path.last().active.decomp() {
        // Subsample position r + 1 ≥ 2 maps to original row rows[r] + 1.
        if r > 0 {
            row_hits[rows[r]] += 1;
        }
        if q > 0 {
            col_hits[cols[q]] += 1;
        }
    }
    Ok((row_hits, col_hits))
}

/// Runs the `M` resampled fits (in parallel) and sums their boundary counts.
pub fn stability_scores(y: &ObservationMatrix, cfg: &SelectionConfig) -> Result<StabilityScores> {
    let n = y.n();
    let half = n / 2;
    if half < 2 {
        return Err(Error::Input(format!("matrix too small to resample: n = {n}")));
    }
    if cfg.k_max == 0 || cfg.budget() > half * half {
        return Err(Error::Argument(format!(
            "k_max = {} needs k_max² <= {} for {half}x{half} subsamples",
            cfg.k_max,
            half * half
        )));
    }
    check_threshold(cfg.threshold_pct)?;

    let budget = cfg.budget();
    let (row_scores, col_scores) = (0..cfg.resamples)
        .into_par_iter()
        .map(|m| score_one(y, budget, cfg.seed, m))
        .try_reduce(
            || (vec![0u64; n], vec![0u64; n]),
            |(mut ra, mut ca), (rb, cb)| {
                ra.iter_mut().zip(rb).for_each(|(a, b)| *a += b);
                ca.iter_mut().zip(cb).for_each(|(a, b)| *a += b);
                Ok((ra, ca))
            },
        )?;

    Ok(StabilityScores {
        row_scores,
        col_scores,
        resamples: cfg.resamples,
        budget,
        seed: cfg.seed,
    })
}

/// Positions (1-based) kept from one score vector: scores at or above
/// `threshold_pct`% of the maximum, reduced to the best-scoring position
/// of each run of consecutive candidates (ties go to the smaller position).
pub fn select_positions(scores: &[u64], threshold_pct: f64) -> Vec<usize> {
    let max = scores.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return Vec::new();
    }
    let tau = threshold_pct / 100.0 * max as f64;
    let mut out = Vec::new();
    // Current run: (best position, best score, last position).
    let mut run: Option<(usize, u64, usize)> = None;
    for (idx, &s) in scores.iter().enumerate() {
        let pos = idx + 1;
        if s == 0 || (s as f64) < tau {
            continue;
        }
        run = match run {
            Some((best, best_score, last)) if pos == last + 1 => {
                if s > best_score {
                    Some((pos, s, pos))
                } else {
                    Some((best, best_score, pos))
                }
            }
            Some((best, _, _)) => {
                out.push(best);
                Some((pos, s, pos))
            }
            None => Some((pos, s, pos)),
        };
    }
    if let Some((best, _, _)) = run {
        out.push(best);
    }
    out
}

/// Thresholds both axes separately (each against its own maximum).
pub fn select_changepoints(scores: &StabilityScores, threshold_pct: f64) -> Result<ChangePointSet> {
    check_threshold(threshold_pct)?;
    ChangePointSet::new(
        scores.n(),
        select_positions(&scores.row_scores, threshold_pct),
        select_positions(&scores.col_scores, threshold_pct),
    )
}

/// Block means of `y` on the grid cut by `cp`: the least-squares block-wise
/// constant fit for that segmentation.
pub fn reconstruct_u(y: &ObservationMatrix, cp: &ChangePointSet) -> Result<ObservationMatrix> {
    let n = y.n();
    let cp = ChangePointSet::new(n, cp.rows.clone(), cp.cols.clone())?;
    let labels = |bounds: &[usize]| -> Vec<usize> {
        (1..=n)
            .map(|pos| bounds.iter().take_while(|&&t| t <= pos).count())
            .collect()
    };
    let rl = labels(&cp.rows);
    let cl = labels(&cp.cols);
    let (nr, nc) = (cp.rows.len() + 1, cp.cols.len() + 1);
    let mut sums = vec![0.0; nr * nc];
    let mut counts = vec![0usize; nr * nc];
    for (i, row) in y.rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let b = rl[i] * nc + cl[j];
            sums[b] += v;
            counts[b] += 1;
        }
    }
    ObservationMatrix::from_fn(n, |i, j| {
        let b = rl[i] * nc + cl[j];
        sums[b] / counts[b] as f64
    })
}

/// `(threshold, K̂_rows, K̂_cols)` for each threshold.
pub fn threshold_sweep(scores: &StabilityScores, thresholds: &[f64]) -> Vec<(f64, usize, usize)> {
    thresholds
        .iter()
        .map(|&t| {
            (
                t,
                select_positions(&scores.row_scores, t).len(),
                select_positions(&scores.col_scores, t).len(),
            )
        })
        .collect()
}

/// 0.5%, 1.0%, …, 50%.
pub fn default_sweep_thresholds() -> Vec<f64> {
    (1..=100).map(|i| i as f64 * 0.5).collect()
}
