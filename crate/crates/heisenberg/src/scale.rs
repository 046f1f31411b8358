//! Pigeonhole selection of a controlled scale and location.
//!
//! Given a cut measure on a ball, the class weights `W_j = Σ_E w·w_j(E)`
//! sum to the measure's total perimeter mass, so some class below the
//! `ceil(1/δ)` horizon must be light; and a light class spreads its
//! endpoint mass so thinly that some sub-ball of radius `δ^j·r` sees
//! almost none of it. This module makes both choices effective: it picks
//! the smallest admissible class, then scans a lattice net of candidate
//! centers for the sub-ball carrying the least class-`j` endpoint mass,
//! using an `(x,y)`-bucket index over the recorded endpoints so that
//! empty neighborhoods cost nothing to reject.

use crate::ball::HBall;
use crate::cutmeasure::CutMeasure;
use crate::lines::LineSample;
use crate::perimeter::{Census, CLASS_CAP};
use crate::point::{rho, HPoint};
use crate::trace::TraceParams;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Slack constants for the two pigeonhole budgets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScaleConsts {
    /// Class budget: admissible `j` needs `W_j ≤ c1·δ·ΣW`.
    pub c1: f64,
    /// Center budget: the chosen sub-ball needs mass `≤ c2·δ^{4j+1}·ΣW`.
    pub c2: f64,
}

impl Default for ScaleConsts {
    fn default() -> Self {
        ScaleConsts { c1: 4.0, c2: 8.0 }
    }
}

#[derive(Debug, Error)]
pub enum ScaleError {
    #[error(
        "no class j ≤ {j_max} satisfies W_j ≤ {threshold:.6e}; class weights {weights:?}"
    )]
    NoAdmissibleScale { weights: Vec<f64>, threshold: f64, j_max: usize },
    #[error(
        "no admissible center at class {j}: best sub-ball mass {best:.6e} exceeds {threshold:.6e}"
    )]
    NoAdmissibleCenter { j: usize, best: f64, threshold: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleDiagnostics {
    /// Total class-weight mass `ΣW_j` (the measure's perimeter mass).
    pub total: f64,
    /// Class admissibility threshold `c1·δ·total`.
    pub j_threshold: f64,
    /// Center admissibility threshold `c2·δ^{4j+1}·total`.
    pub y_threshold: f64,
    /// Class-`j` mass of the selected sub-ball.
    pub selected_mass: f64,
    /// Number of net candidates examined.
    pub candidates: usize,
}

/// The outcome of scale selection: the class weights on the ball and the
/// chosen `(j, y)` with its sub-ball budget diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleDecomposition {
    pub delta: f64,
    /// `W_j` for `j = 0..=CLASS_CAP`.
    pub weights: Vec<f64>,
    pub selected_j: usize,
    pub selected_y: HPoint,
    pub diagnostics: ScaleDiagnostics,
}

/// Select the smallest light class `j ≤ ceil(1/δ)` and a sub-ball center
/// `y` (from a lattice net at scale `δ^j·r`, always containing the ball
/// center) minimizing the class-`j` endpoint mass of `B_{δ^j r}(y)`,
/// subject to `B_{δ^j r}(y) ⊆ ball`.
pub fn select_scale(
    cm: &CutMeasure,
    ball: &HBall,
    sample: &LineSample,
    params: &TraceParams,
    delta: f64,
    consts: ScaleConsts,
    gamma: f64,
) -> Result<ScaleDecomposition, ScaleError> {
    assert!(delta > 0.0 && delta < 0.5, "scale base must lie in (0, 1/2)");
    let censuses: Vec<(f64, Census)> = cm
        .atoms
        .iter()
        .map(|a| (a.weight, Census::collect(&a.set, ball, sample, delta, params, gamma)))
        .collect();

    let mut weights = vec![0.0f64; CLASS_CAP + 1];
    for (w, census) in &censuses {
        for (j, wj) in census.weights_full().into_iter().enumerate() {
            weights[j] += w * wj;
        }
    }
    let total: f64 = weights.iter().sum();

    if total == 0.0 {
        return Ok(ScaleDecomposition {
            delta,
            weights,
            selected_j: 0,
            selected_y: ball.center,
            diagnostics: ScaleDiagnostics {
                total,
                j_threshold: 0.0,
                y_threshold: 0.0,
                selected_mass: 0.0,
                candidates: 1,
            },
        });
    }

    let j_max = (1.0 / delta).ceil() as usize;
    let j_threshold = consts.c1 * delta * total;
    let selected_j = (0..=j_max.min(CLASS_CAP))
        .find(|&j| weights[j] <= j_threshold)
        .ok_or_else(|| ScaleError::NoAdmissibleScale {
            weights: weights[..=j_max.min(CLASS_CAP)].to_vec(),
            threshold: j_threshold,
            j_max: j_max.min(CLASS_CAP),
        })?;

    // Class-j endpoint mass, bucketed by (x, y) for cheap neighborhood
    // rejection. Each endpoint of an atom's census carries the atom
    // weight times that census's per-endpoint normalization.
    let s = delta.powi(selected_j as i32) * ball.radius;
    let bucket = |v: f64| (v / s).floor() as i64;
    let mut index: HashMap<(i64, i64), Vec<(HPoint, f64)>> = HashMap::new();
    for (w, census) in &censuses {
        let contribution = w * census.endpoint_weight();
        for e in census.endpoints.iter().filter(|e| e.class_j == selected_j) {
            index
                .entry((bucket(e.point.x), bucket(e.point.y)))
                .or_default()
                .push((e.point, contribution));
        }
    }
    let mass_at = |y: HPoint| -> f64 {
        let sub = HBall { center: y, radius: s };
        let (bx, by) = (bucket(y.x), bucket(y.y));
        let mut m = 0.0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = index.get(&(bx + dx, by + dy)) {
                    for (p, c) in list {
                        if sub.contains(*p) {
                            m += c;
                        }
                    }
                }
            }
        }
        m
    };

    // Net candidates: ball center plus a lattice with horizontal spacing
    // s/2 and vertical spacing s²/2, filtered to sub-balls contained in
    // the ball.
    let r = ball.radius;
    let containment = r - s + 1e-12 * r;
    let sx = s / 2.0;
    let sz = s * s / 2.0;
    let ax = ((r / std::f64::consts::SQRT_2) / sx).ceil() as i64;
    let az = ((r * r
        + std::f64::consts::SQRT_2 * r * (ball.center.x.abs() + ball.center.y.abs()))
        / sz)
        .ceil() as i64;
    let mut best: Option<(f64, HPoint)> = None;
    let mut candidates = 0usize;
    'outer: for kc in -az..=az {
        for jc in -ax..=ax {
            for ic in -ax..=ax {
                let y = HPoint::new(
                    ball.center.x + ic as f64 * sx,
                    ball.center.y + jc as f64 * sx,
                    ball.center.z + kc as f64 * sz,
                );
                if rho(ball.center, y) > containment {
                    continue;
                }
                candidates += 1;
                let m = mass_at(y);
                if best.map_or(true, |(bm, _)| m < bm) {
                    best = Some((m, y));
                    if m == 0.0 {
                        break 'outer;
                    }
                }
            }
        }
    }
    let (selected_mass, selected_y) =
        best.expect("the ball center is always an admissible net candidate");

    let y_threshold = consts.c2 * delta.powi(4 * selected_j as i32 + 1) * total;
    if selected_mass > y_threshold {
        return Err(ScaleError::NoAdmissibleCenter {
            j: selected_j,
            best: selected_mass,
            threshold: y_threshold,
        });
    }

    Ok(ScaleDecomposition {
        delta,
        weights,
        selected_j,
        selected_y,
        diagnostics: ScaleDiagnostics {
            total,
            j_threshold,
            y_threshold,
            selected_mass,
            candidates,
        },
    })
}
