//! Horizontal lines, ball chords, and invariant-measure line sampling.
//!
//! A horizontal line through `g` with direction angle `theta` is the curve
//! `t -> g·(t·cosθ, t·sinθ, 0)`; its `z`-coordinate is affine in `t` with
//! slope `g.x·sinθ − g.y·cosθ`. Lines are sampled by drawing the base point
//! uniformly from the ball's bounding box and `theta` uniformly from
//! `[0, 2π)`, rejecting lines whose chord with the ball is empty; all
//! accepted lines get equal weights summing to one.

use crate::ball::HBall;
use crate::point::{h_mul, HPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A horizontal line, parametrized by arc length of its `xy`-projection.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HorizontalLine {
    pub base: HPoint,
    pub theta: f64,
}

impl HorizontalLine {
    pub fn new(base: HPoint, theta: f64) -> Self {
        HorizontalLine { base, theta }
    }

    /// The point at parameter `t`: `base·(t·cosθ, t·sinθ, 0)`.
    pub fn point_at(&self, t: f64) -> HPoint {
        let (s, c) = self.theta.sin_cos();
        h_mul(self.base, HPoint::new(t * c, t * s, 0.0))
    }

    /// Slope of the (affine) `z`-coordinate along the line.
    pub fn z_slope(&self) -> f64 {
        let (s, c) = self.theta.sin_cos();
        self.base.x * s - self.base.y * c
    }

    /// Parameter interval `(t_lo, t_hi)` of the open chord cut by `ball`,
    /// or `None` when the line misses the ball.
    ///
    /// Membership of the point at `t` reads `sqrt(s² + w²) + s < r²` where
    /// `s(t)` is the horizontal square distance to the center (monic
    /// quadratic in `t`) and `w(t)` is the twisted central offset (affine
    /// in `t`). That is equivalent to `w² + 2r²·s < r⁴`, a single convex
    /// quadratic inequality, so the chord is one open interval with
    /// closed-form endpoints.
    pub fn chord(&self, ball: &HBall) -> Option<(f64, f64)> {
        let (sn, cs) = self.theta.sin_cos();
        let c = ball.center;
        let r = ball.radius;
        let dx0 = self.base.x - c.x;
        let dy0 = self.base.y - c.y;
        // s(t) = t² + s1·t + s0
        let s1 = 2.0 * (dx0 * cs + dy0 * sn);
        let s0 = dx0 * dx0 + dy0 * dy0;
        // w(t) = w1·t + w0
        let w0 = self.base.z - c.z + 2.0 * c.x * dy0 - 2.0 * c.y * dx0;
        let w1 = self.z_slope() + 2.0 * (c.x * sn - c.y * cs);
        let r2 = r * r;
        // w² + 2r²·s − r⁴ = A·t² + B·t + C
        let a = w1 * w1 + 2.0 * r2;
        let b = 2.0 * w0 * w1 + 2.0 * r2 * s1;
        let cc = w0 * w0 + 2.0 * r2 * s0 - r2 * r2;
        let disc = b * b - 4.0 * a * cc;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        Some(((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)))
    }
}

/// An equal-weight line sample attached to a ball region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineSample {
    pub seed: u64,
    pub region: HBall,
    pub lines: Vec<HorizontalLine>,
}

impl LineSample {
    /// The common weight; weights sum to one over the sample.
    pub fn weight(&self) -> f64 {
        1.0 / self.lines.len() as f64
    }
}

#[derive(Debug, Error)]
pub enum SamplingError {
    #[error("line sample needs count >= 1")]
    EmptyRequest,
    #[error("rejection rate exceeded 99.9% after {attempts} attempts")]
    RejectionRate { attempts: u64 },
}

/// Draw `count` horizontal lines meeting `ball`, reproducibly from `seed`.
///
/// The construction is dilation-covariant: scaling the ball by a power of
/// two and reusing the seed yields the dilated lines exactly, because the
/// bounding box scales exactly and the chord test is homogeneous.
pub fn sample_lines(ball: &HBall, count: usize, seed: u64) -> Result<LineSample, SamplingError> {
    if count == 0 {
        return Err(SamplingError::EmptyRequest);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (bx, by, bz) = ball.bounding_box();
    let mut lines = Vec::with_capacity(count);
    let mut attempts = 0u64;
    let max_attempts = (count as u64) * 1000 + 10_000;
    while lines.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(SamplingError::RejectionRate { attempts });
        }
        let ux: f64 = rng.gen();
        let uy: f64 = rng.gen();
        let uz: f64 = rng.gen();
        let ut: f64 = rng.gen();
        let base = HPoint::new(
            bx[0] + ux * (bx[1] - bx[0]),
            by[0] + uy * (by[1] - by[0]),
            bz[0] + uz * (bz[1] - bz[0]),
        );
        let line = HorizontalLine::new(base, ut * std::f64::consts::TAU);
        if line.chord(ball).is_some() {
            lines.push(line);
        }
    }
    Ok(LineSample { seed, region: *ball, lines })
}
