//! Restriction of a set to a horizontal line clipped by a ball.
//!
//! The chord is sampled at a fixed step (half the working resolution);
//! consecutive occupied samples form intervals, and gaps shorter than the
//! resolution are closed. The closing rule is applied to the set and to
//! its complement independently and symmetrically — that is this crate's
//! concrete stand-in for ignoring measure-zero symmetric differences.

use crate::ball::HBall;
use crate::lines::HorizontalLine;
use crate::sets::SetMembership;
use serde::{Deserialize, Serialize};

/// Sampling parameters for trace extraction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceParams {
    /// Sampling step along the line parameter.
    pub step: f64,
    /// Gaps strictly shorter than this are closed.
    pub min_gap: f64,
}

impl TraceParams {
    /// Conventional parameters for working resolution `h`: sample at
    /// `h/2`, close sub-`h` gaps.
    pub fn for_resolution(h: f64) -> Self {
        assert!(h > 0.0, "resolution must be positive");
        TraceParams { step: 0.5 * h, min_gap: h }
    }
}

/// One maximal interval of a trace, in line parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceInterval {
    pub t0: f64,
    pub t1: f64,
    /// Whether each end is interior to the chord (as opposed to sitting on
    /// the ball boundary). Only interior ends count as surface crossings.
    pub left_interior: bool,
    pub right_interior: bool,
}

impl TraceInterval {
    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// The trace of a set on a chord: sorted disjoint intervals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineTrace {
    pub t_lo: f64,
    pub t_hi: f64,
    pub intervals: Vec<TraceInterval>,
}

impl LineTrace {
    pub fn chord_len(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn total_len(&self) -> f64 {
        self.intervals.iter().map(|iv| iv.len()).sum()
    }

    /// Lengths of the gaps strictly between consecutive intervals.
    pub fn interior_gaps(&self) -> Vec<f64> {
        self.intervals.windows(2).map(|w| w[1].t0 - w[0].t1).collect()
    }
}

/// Extract the trace of `set` along `line` within `ball`; `None` when the
/// line misses the ball.
pub fn restrict_to_line(
    set: &dyn SetMembership,
    line: &HorizontalLine,
    ball: &HBall,
    params: &TraceParams,
) -> Option<LineTrace> {
    let (t_lo, t_hi) = line.chord(ball)?;
    let len = t_hi - t_lo;
    if !(len > 0.0) {
        return None;
    }
    let cells = ((len / params.step).ceil() as usize).max(1);
    let dt = len / cells as f64;
    // Occupancy per cell, sampled at cell midpoints.
    let mut runs: Vec<(usize, usize)> = Vec::new(); // [start, end) in cells
    let mut open: Option<usize> = None;
    for c in 0..cells {
        let t = t_lo + (c as f64 + 0.5) * dt;
        let inside = set.contains(line.point_at(t));
        match (inside, open) {
            (true, None) => open = Some(c),
            (false, Some(s)) => {
                runs.push((s, c));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        runs.push((s, cells));
    }
    // Close gaps strictly shorter than min_gap.
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for run in runs {
        match merged.last_mut() {
            Some(prev) if (run.0 - prev.1) as f64 * dt < params.min_gap => prev.1 = run.1,
            _ => merged.push(run),
        }
    }
    let intervals = merged
        .into_iter()
        .map(|(s, e)| TraceInterval {
            t0: t_lo + s as f64 * dt,
            t1: t_lo + e as f64 * dt,
            left_interior: s > 0,
            right_interior: e < cells,
        })
        .collect();
    Some(LineTrace { t_lo, t_hi, intervals })
}
