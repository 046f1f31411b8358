//! Integer grids in the group and their finite metric spaces.
//!
//! The grid of side `k` consists of the points `(a, b, c)` with integer
//! coordinates in `{0, …, k}`, carrying the restriction of `rho`.
//! Shrinking the grid with the dilation `h_dilate(1/k, ·)` maps it onto
//! `{0,…,k}/k × {0,…,k}/k × {0,…,k}/k²` and scales every distance by
//! exactly `1/k`, which is the discrete model used to pass between unit
//! scale and lattice scale.

use crate::point::{rho, HPoint};
use gapwb_core::metric::FiniteMetric;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Largest full grid: `(k+1)³` points must stay within the cut-cone and
/// brute-force budgets of downstream consumers.
pub const MAX_GRID_POINTS: usize = 64;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid side k must be at least 1, got {0}")]
    SideTooSmall(usize),
    #[error("grid with (k+1)³ = {points} points exceeds the cap {cap}")]
    TooLarge { points: usize, cap: usize },
    #[error("subset size {size} is empty or exceeds the {points}-point grid")]
    BadSubset { size: usize, points: usize },
    #[error("metric construction: {0}")]
    Metric(String),
}

/// All `(k+1)³` integer grid points, ordered by `c`, then `b`, then `a`.
pub fn grid_points(k: usize) -> Result<Vec<HPoint>, GridError> {
    if k < 1 {
        return Err(GridError::SideTooSmall(k));
    }
    let points = (k + 1).pow(3);
    if points > MAX_GRID_POINTS {
        return Err(GridError::TooLarge { points, cap: MAX_GRID_POINTS });
    }
    let mut out = Vec::with_capacity(points);
    for c in 0..=k {
        for b in 0..=k {
            for a in 0..=k {
                out.push(HPoint::new(a as f64, b as f64, c as f64));
            }
        }
    }
    Ok(out)
}

/// The grid points together with their pairwise `rho` distances.
pub fn grid_metric(k: usize) -> Result<(Vec<HPoint>, FiniteMetric), GridError> {
    let points = grid_points(k)?;
    let metric = FiniteMetric::from_fn(points.len(), |i, j| rho(points[i], points[j]))
        .map_err(|e| GridError::Metric(e.to_string()))?;
    Ok((points, metric))
}

/// A seeded `size`-point subset of the grid with its restricted metric.
pub fn grid_metric_subset(
    k: usize,
    size: usize,
    seed: u64,
) -> Result<(Vec<HPoint>, FiniteMetric), GridError> {
    let points = grid_points(k)?;
    if size == 0 || size > points.len() {
        return Err(GridError::BadSubset { size, points: points.len() });
    }
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut chosen: Vec<usize> = idx[..size].to_vec();
    chosen.sort_unstable();
    let sub_points: Vec<HPoint> = chosen.iter().map(|&i| points[i]).collect();
    let metric = FiniteMetric::from_fn(size, |i, j| rho(sub_points[i], sub_points[j]))
        .map_err(|e| GridError::Metric(e.to_string()))?;
    Ok((sub_points, metric))
}
