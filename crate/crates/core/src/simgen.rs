//! Synthetic block-wise constant matrices with Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lars::ChangePointSet;
use crate::linops::ObservationMatrix;

/// Block means of the four benchmark patterns, indexed `[scenario − 1][k][l]`.
pub const SCENARIO_MEANS: [[[f64; 5]; 5]; 4] = [
    // checkerboard
    [
        [1.0, 0.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0, 0.0, 1.0],
    ],
    // block diagonal
    [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ],
    [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 1.0],
    ],
    [
        [0.0, -1.0, -1.0, -1.0, -1.0],
        [-1.0, -1.0, 0.0, -1.0, 0.0],
        [-1.0, 0.0, 1.0, 0.0, 1.0],
        [-1.0, -1.0, 0.0, -1.0, 0.0],
        [-1.0, 0.0, 1.0, 0.0, 1.0],
    ],
];

/// Parameters of one synthetic draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Pattern 1..=4.
    pub id: u8,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    /// True boundaries shared by rows and columns; `None` spaces the four
    /// boundaries evenly (see [`equal_boundaries`]).
    pub boundaries: Option<Vec<usize>>,
}

impl Scenario {
    pub fn new(id: u8, n: usize, sigma: f64, seed: u64) -> Self {
        Self {
            id,
            n,
            sigma,
            seed,
            boundaries: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    pub y: ObservationMatrix,
    pub truth: ChangePointSet,
    /// Noiseless block means.
    pub u: ObservationMatrix,
}

/// `k` boundaries splitting `1..=n` into `k + 1` near-equal segments:
/// `t_i = 1 + ⌊i·n/(k+1)⌋`. For `n = 500, k = 4` this is `{101, 201, 301, 401}`.
pub fn equal_boundaries(n: usize, k: usize) -> Vec<usize> {
    (1..=k).map(|i| 1 + i * n / (k + 1)).collect()
}

// Segment index (0-based) of every 0-based position.
fn segment_labels(n: usize, boundaries: &[usize]) -> Vec<usize> {
    (1..=n)
        .map(|pos| boundaries.iter().take_while(|&&t| t <= pos).count())
        .collect()
}

fn add_noise(u: &ObservationMatrix, sigma: f64, seed: u64) -> Result<ObservationMatrix> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::Argument(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = u
        .as_slice()
        .iter()
        .map(|&m| {
            let z: f64 = StandardNormal.sample(&mut rng);
            m + sigma * z
        })
        .collect();
    ObservationMatrix::new(u.n(), data)
}

fn check_boundaries(n: usize, b: &[usize]) -> Result<()> {
    if b.windows(2).any(|w| w[0] >= w[1]) || b.iter().any(|&t| t < 2 || t > n) {
        return Err(Error::Argument(format!(
            "boundaries must be strictly increasing within 2..={n}: {b:?}"
        )));
    }
    Ok(())
}

/// Draws `Y = U + σZ` for one of the four benchmark patterns.
pub fn generate(sc: &Scenario) -> Result<GeneratedDataset> {
    if !(1..=4).contains(&sc.id) {
        return Err(Error::Argument(format!("scenario id must be 1..=4, got {}", sc.id)));
    }
    if sc.n < 10 {
        return Err(Error::Argument(format!("scenario matrices need n >= 10, got {}", sc.n)));
    }
    let boundaries = match &sc.boundaries {
        Some(b) => {
            if b.len() != 4 {
                return Err(Error::Argument(format!(
                    "scenarios have 4 boundaries per axis, got {}",
                    b.len()
                )));
            }
            b.clone()
        }
        None => equal_boundaries(sc.n, 4),
    };
    check_boundaries(sc.n, &boundaries)?;
    let means = &SCENARIO_MEANS[usize::from(sc.id) - 1];
    let seg = segment_labels(sc.n, &boundaries);
    let u = ObservationMatrix::from_fn(sc.n, |i, j| means[seg[i]][seg[j]])?;
    let y = add_noise(&u, sc.sigma, sc.seed)?;
    let truth = ChangePointSet::new(sc.n, boundaries.clone(), boundaries)?;
    Ok(GeneratedDataset { y, truth, u })
}

/// Alternating 0/1 checkerboard with `k` evenly spaced boundaries per axis,
/// top-left block equal to 1 as in the first benchmark pattern.
pub fn generate_checkerboard_k(n: usize, k: usize, sigma: f64, seed: u64) -> Result<GeneratedDataset> {
    if n < 2 || 2 * (k + 1) > n {
        return Err(Error::Argument(format!(
            "{k} boundaries need segments of length >= 2, impossible with n = {n}"
        )));
    }
    let boundaries = equal_boundaries(n, k);
    let seg = segment_labels(n, &boundaries);
    let u = ObservationMatrix::from_fn(n, |i, j| ((seg[i] + seg[j] + 1) % 2) as f64)?;
    let y = add_noise(&u, sigma, seed)?;
    let truth = ChangePointSet::new(n, boundaries.clone(), boundaries)?;
    Ok(GeneratedDataset { y, truth, u })
}
