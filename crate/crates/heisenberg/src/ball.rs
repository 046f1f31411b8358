//! Metric balls for `rho` and their axis-aligned bounding boxes.

use crate::point::{rho, HPoint};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lebesgue volume of the unit ball of `rho` centered anywhere: `2π/3`.
///
/// Derivation: with `s = x² + y²`, membership in the unit ball at the
/// origin reads `sqrt(s² + z²) + s < 1`, i.e. `|z| < sqrt(1 - 2s)` for
/// `s < 1/2`; integrating the slab height over the disk gives `2π/3`.
pub const UNIT_BALL_VOLUME: f64 = 2.0 * std::f64::consts::PI / 3.0;

#[derive(Debug, Error)]
pub enum BallError {
    #[error("ball radius must be positive, got {0}")]
    BadRadius(f64),
}

/// An open ball `{p : rho(center, p) < radius}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct HBall {
    pub center: HPoint,
    pub radius: f64,
}

impl HBall {
    pub fn new(center: HPoint, radius: f64) -> Result<Self, BallError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(BallError::BadRadius(radius));
        }
        Ok(HBall { center, radius })
    }

    /// The unit ball at the identity.
    pub fn unit() -> Self {
        HBall { center: crate::point::ORIGIN, radius: 1.0 }
    }

    pub fn contains(&self, p: HPoint) -> bool {
        rho(self.center, p) < self.radius
    }

    /// Lebesgue volume, using the exact quartic homogeneity
    /// `vol(B_r) = r⁴ · vol(B_1)`.
    pub fn volume(&self) -> f64 {
        self.radius.powi(4) * UNIT_BALL_VOLUME
    }

    /// Tight axis-aligned bounding box.
    ///
    /// Membership forces the horizontal square distance `s` below `r²/2`
    /// (so `|Δx|, |Δy| ≤ r/√2`) and the twisted central coordinate
    /// `w = Δz + 2·c.x·Δy − 2·c.y·Δx` below `r²` in absolute value, so
    /// `|Δz| ≤ r² + √2·r·(|c.x| + |c.y|)`. All three bounds scale exactly
    /// under dilation, which keeps box-based sampling dilation-covariant.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let r = self.radius;
        let hxy = r / std::f64::consts::SQRT_2;
        let hz = r * r + std::f64::consts::SQRT_2 * r * (self.center.x.abs() + self.center.y.abs());
        (
            [self.center.x - hxy, self.center.x + hxy],
            [self.center.y - hxy, self.center.y + hxy],
            [self.center.z - hz, self.center.z + hz],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::{h_dilate, HPoint, ORIGIN};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_bad_radius() {
        assert!(HBall::new(ORIGIN, 0.0).is_err());
        assert!(HBall::new(ORIGIN, -2.0).is_err());
        assert!(HBall::new(ORIGIN, f64::NAN).is_err());
    }

    #[test]
    fn bounding_box_contains_the_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let center = HPoint::new(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let ball = HBall::new(center, rng.gen_range(0.1..2.0)).unwrap();
            let (bx, by, bz) = ball.bounding_box();
            // Random points of the ball stay inside the box.
            let mut found = 0;
            for _ in 0..2000 {
                let p = HPoint::new(
                    rng.gen_range(bx[0]..bx[1]),
                    rng.gen_range(by[0]..by[1]),
                    rng.gen_range(bz[0]..bz[1]),
                );
                if ball.contains(p) {
                    found += 1;
                    assert!(p.x >= bx[0] && p.x <= bx[1]);
                    assert!(p.y >= by[0] && p.y <= by[1]);
                    assert!(p.z >= bz[0] && p.z <= bz[1]);
                }
            }
            assert!(found > 0, "box sampling never hit the ball");
        }
    }

    #[test]
    fn bounding_box_is_dilation_covariant() {
        let ball = HBall::new(HPoint::new(1.0, -0.5, 0.25), 0.75).unwrap();
        let (bx, by, bz) = ball.bounding_box();
        let big = HBall::new(h_dilate(2.0, ball.center), 2.0 * ball.radius).unwrap();
        let (cx, cy, cz) = big.bounding_box();
        assert_eq!(cx, [2.0 * bx[0], 2.0 * bx[1]]);
        assert_eq!(cy, [2.0 * by[0], 2.0 * by[1]]);
        assert_eq!(cz, [4.0 * bz[0], 4.0 * bz[1]]);
    }

    #[test]
    fn volume_homogeneity_matches_monte_carlo() {
        // Check vol(B_1) = 2π/3 by rejection sampling in the bounding box.
        let ball = HBall::unit();
        let (bx, by, bz) = ball.bounding_box();
        let box_vol = (bx[1] - bx[0]) * (by[1] - by[0]) * (bz[1] - bz[0]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 400_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let p = HPoint::new(
                rng.gen_range(bx[0]..bx[1]),
                rng.gen_range(by[0]..by[1]),
                rng.gen_range(bz[0]..bz[1]),
            );
            if ball.contains(p) {
                hits += 1;
            }
        }
        let est = box_vol * hits as f64 / n as f64;
        assert!(
            (est - UNIT_BALL_VOLUME).abs() < 0.02,
            "unit ball volume estimate {est} vs {UNIT_BALL_VOLUME}"
        );
        // Quartic homogeneity: volume() of a radius-2 ball is 16x.
        let big = HBall::new(ORIGIN, 2.0).unwrap();
        assert!((big.volume() / ball.volume() - 16.0).abs() < 1e-12);
    }
}
