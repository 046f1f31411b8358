//! Perimeter of a set on a ball through the kinematic endpoint count.
//!
//! The perimeter of `E` restricted to a ball is, up to a dimensional
//! constant `gamma`, the integral over horizontal lines of the number of
//! endpoints of the intervals forming `E ∩ L`. We estimate the integral by
//! the line sample's equal-weight average. Each interval is classified by
//! its length: class `j` holds lengths in `(2rδ^{j+1}, 2rδ^j]`, and the
//! class weight `w_j` counts, with the same normalization, the endpoints
//! of class-`j` intervals of `E` and of its complement, averaged with
//! weight one half each. Every recorded endpoint lands in exactly one
//! class, so `Σ_j w_j` equals the perimeter identically, not just in the
//! limit.

use crate::ball::HBall;
use crate::lines::LineSample;
use crate::point::HPoint;
use crate::sets::{Complement, SetMembership};
use crate::trace::{restrict_to_line, TraceParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest interval-length class tracked individually; shorter intervals
/// are clamped into this class so the census still partitions everything.
/// With `δ ≤ 1/2` this corresponds to lengths below `2^{-59}·r`, far
/// beneath any trace resolution.
pub const CLASS_CAP: usize = 60;

/// Length class of an interval on a chord of a radius-`r` ball:
/// the unique `j ≥ 0` with `chord_scale·δ^{j+1} < len ≤ chord_scale·δ^j`,
/// where `chord_scale = 2r`, clamped to `CLASS_CAP`.
pub fn length_class(len: f64, chord_scale: f64, delta: f64) -> usize {
    if len >= chord_scale {
        return 0;
    }
    if len <= 0.0 {
        return CLASS_CAP;
    }
    let guess = ((len / chord_scale).ln() / delta.ln()).floor().max(0.0);
    let mut j = if guess >= CLASS_CAP as f64 { CLASS_CAP } else { guess as usize };
    while j > 0 && len > chord_scale * delta.powi(j as i32) {
        j -= 1;
    }
    while j < CLASS_CAP && len <= chord_scale * delta.powi(j as i32 + 1) {
        j += 1;
    }
    j
}

/// One interior interval endpoint found on a sampled line.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EndpointRecord {
    /// Position of the endpoint in the group.
    pub point: HPoint,
    /// Line parameter of the endpoint.
    pub t: f64,
    /// Index of the line in the sample.
    pub line: usize,
    /// Length class of the interval this endpoint bounds.
    pub class_j: usize,
    /// Whether the interval belongs to the complement trace.
    pub of_complement: bool,
}

/// The full endpoint census of one set over one line sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Census {
    pub radius: f64,
    pub delta: f64,
    pub gamma: f64,
    pub line_count: usize,
    pub endpoints: Vec<EndpointRecord>,
}

impl Census {
    /// Walk every sampled line, trace `set` and its complement, and record
    /// the interior endpoints of every interval together with its length
    /// class. Lines are processed in parallel but assembled in sample
    /// order, so the census is independent of the thread count.
    pub fn collect(
        set: &dyn SetMembership,
        ball: &HBall,
        sample: &LineSample,
        delta: f64,
        params: &TraceParams,
        gamma: f64,
    ) -> Census {
        assert!(delta > 0.0 && delta < 1.0, "length-class base must lie in (0,1)");
        let chord_scale = 2.0 * ball.radius;
        let per_line: Vec<Vec<EndpointRecord>> = sample
            .lines
            .par_iter()
            .enumerate()
            .map(|(idx, line)| {
                let mut recs = Vec::new();
                for (of_complement, trace) in [
                    (false, restrict_to_line(set, line, ball, params)),
                    (true, restrict_to_line(&Complement(set), line, ball, params)),
                ] {
                    let Some(trace) = trace else { continue };
                    for iv in &trace.intervals {
                        let class_j = length_class(iv.len(), chord_scale, delta);
                        for (interior, t) in
                            [(iv.left_interior, iv.t0), (iv.right_interior, iv.t1)]
                        {
                            if interior {
                                recs.push(EndpointRecord {
                                    point: line.point_at(t),
                                    t,
                                    line: idx,
                                    class_j,
                                    of_complement,
                                });
                            }
                        }
                    }
                }
                recs
            })
            .collect();
        Census {
            radius: ball.radius,
            delta,
            gamma,
            line_count: sample.lines.len(),
            endpoints: per_line.into_iter().flatten().collect(),
        }
    }

    /// Normalization carried by a single recorded endpoint: the set and
    /// complement censuses each enter with weight one half, and the line
    /// integral is the equal-weight sample mean.
    pub fn endpoint_weight(&self) -> f64 {
        if self.line_count == 0 {
            return 0.0;
        }
        self.gamma * 0.5 / self.line_count as f64
    }

    /// Kinematic perimeter estimate: `gamma` times the mean symmetrized
    /// endpoint count per line.
    pub fn perimeter(&self) -> f64 {
        self.endpoints.len() as f64 * self.endpoint_weight()
    }

    /// Weight of one length class.
    pub fn weight_of_class(&self, j: usize) -> f64 {
        let n = self.endpoints.iter().filter(|e| e.class_j == j).count();
        n as f64 * self.endpoint_weight()
    }

    /// All class weights, indexed `0..=CLASS_CAP`.
    pub fn weights_full(&self) -> Vec<f64> {
        let mut counts = vec![0usize; CLASS_CAP + 1];
        for e in &self.endpoints {
            counts[e.class_j] += 1;
        }
        let w = self.endpoint_weight();
        counts.into_iter().map(|c| c as f64 * w).collect()
    }

    /// Weight of class `j` restricted to a sub-ball (endpoints inside it).
    pub fn weight_in_ball(&self, j: usize, sub: &HBall) -> f64 {
        let n = self
            .endpoints
            .iter()
            .filter(|e| e.class_j == j && sub.contains(e.point))
            .count();
        n as f64 * self.endpoint_weight()
    }
}

/// Perimeter of `set` on `ball` together with the length-class weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerimeterReport {
    pub per: f64,
    pub weights: Vec<f64>,
    pub census: Census,
}

/// Estimate the perimeter of `set` on `ball` by the kinematic endpoint
/// count over `sample`, with the length-class decomposition.
pub fn perimeter_kinematic(
    set: &dyn SetMembership,
    ball: &HBall,
    sample: &LineSample,
    delta: f64,
    params: &TraceParams,
    gamma: f64,
) -> PerimeterReport {
    let census = Census::collect(set, ball, sample, delta, params, gamma);
    PerimeterReport { per: census.perimeter(), weights: census.weights_full(), census }
}

#[derive(Debug, thiserror::Error)]
pub enum IsoperimetricError {
    #[error(
        "perimeter estimate vanished although both parts have positive measure \
         (in {vol_in}, out {vol_out}); the sample or resolution is too coarse"
    )]
    ResolutionTooCoarse { vol_in: f64, vol_out: f64 },
}

/// Volumes of `ball ∩ set` and `ball ∖ set` by a deterministic cubic
/// lattice scan of the ball's bounding box with spacing `h_vol`.
pub fn ball_volume_split(
    set: &dyn SetMembership,
    ball: &HBall,
    h_vol: f64,
) -> (f64, f64) {
    assert!(h_vol > 0.0, "lattice spacing must be positive");
    let ([x0, x1], [y0, y1], [z0, z1]) = ball.bounding_box();
    let steps = |a: f64, b: f64| ((b - a) / h_vol).ceil().max(1.0) as usize;
    let (nx, ny, nz) = (steps(x0, x1), steps(y0, y1), steps(z0, z1));
    let cell = h_vol * h_vol * h_vol;
    let mut vol_in = 0.0;
    let mut vol_out = 0.0;
    for k in 0..nz {
        let z = z0 + (k as f64 + 0.5) * h_vol;
        for j in 0..ny {
            let y = y0 + (j as f64 + 0.5) * h_vol;
            for i in 0..nx {
                let p = HPoint::new(x0 + (i as f64 + 0.5) * h_vol, y, z);
                if ball.contains(p) {
                    if set.contains(p) {
                        vol_in += cell;
                    } else {
                        vol_out += cell;
                    }
                }
            }
        }
    }
    (vol_in, vol_out)
}

/// Scale-invariant isoperimetric quotient
/// `μ(B∩E)·μ(B∖E) / (r⁴ · per^{4/3})`. Trivial sets give zero; a zero
/// perimeter estimate with both measures positive is a resolution error.
pub fn isoperimetric_ratio(
    set: &dyn SetMembership,
    ball: &HBall,
    sample: &LineSample,
    params: &TraceParams,
    h_vol: f64,
) -> Result<f64, IsoperimetricError> {
    let (vol_in, vol_out) = ball_volume_split(set, ball, h_vol);
    if vol_in == 0.0 || vol_out == 0.0 {
        return Ok(0.0);
    }
    let census = Census::collect(set, ball, sample, 0.25, params, 1.0);
    let per = census.perimeter();
    if per == 0.0 {
        return Err(IsoperimetricError::ResolutionTooCoarse { vol_in, vol_out });
    }
    let r4 = ball.radius.powi(4);
    Ok(vol_in * vol_out / (r4 * per.powf(4.0 / 3.0)))
}
