//! Membership predicates for measurable sets.
//!
//! Analytic shapes (half-spaces, slabs, balls) answer membership exactly,
//! which matters for the monotonicity experiments: a half-space's trace on
//! any horizontal line is a single interval *exactly*, while a voxelized
//! half-space acquires staircase noise that biases non-monotonicity
//! upward. Voxel sets implement the same trait, so every measurement
//! runs on either representation.

use crate::ball::HBall;
use crate::point::{h_dilate, HPoint};

/// A measurable subset of the ambient space, queried pointwise.
pub trait SetMembership: Sync {
    fn contains(&self, p: HPoint) -> bool;
}

/// `{p : normal · p >= offset}`, boundary plane included.
#[derive(Debug, Clone, Copy)]
pub struct HalfSpace {
    pub normal: [f64; 3],
    pub offset: f64,
}

impl SetMembership for HalfSpace {
    fn contains(&self, p: HPoint) -> bool {
        self.normal[0] * p.x + self.normal[1] * p.y + self.normal[2] * p.z >= self.offset
    }
}

/// `{p : z_lo < p.z < z_hi}` — a slab around the center's direction.
#[derive(Debug, Clone, Copy)]
pub struct CentralSlab {
    pub z_lo: f64,
    pub z_hi: f64,
}

impl SetMembership for CentralSlab {
    fn contains(&self, p: HPoint) -> bool {
        p.z > self.z_lo && p.z < self.z_hi
    }
}

/// A metric ball as a membership predicate.
#[derive(Debug, Clone, Copy)]
pub struct BallSet(pub HBall);

impl SetMembership for BallSet {
    fn contains(&self, p: HPoint) -> bool {
        self.0.contains(p)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EmptySet;

impl SetMembership for EmptySet {
    fn contains(&self, _: HPoint) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FullSet;

impl SetMembership for FullSet {
    fn contains(&self, _: HPoint) -> bool {
        true
    }
}

/// Complement of another set.
pub struct Complement<'a>(pub &'a dyn SetMembership);

impl SetMembership for Complement<'_> {
    fn contains(&self, p: HPoint) -> bool {
        !self.0.contains(p)
    }
}

/// The dilate of a set: `p` belongs iff `dilate(1/s, p)` belongs to the
/// original. Built with the forward factor `s > 0`.
pub struct Dilated<'a> {
    inv: f64,
    inner: &'a dyn SetMembership,
}

impl<'a> Dilated<'a> {
    pub fn new(s: f64, inner: &'a dyn SetMembership) -> Self {
        assert!(s > 0.0, "dilation factor must be positive");
        Dilated { inv: 1.0 / s, inner }
    }
}

impl SetMembership for Dilated<'_> {
    fn contains(&self, p: HPoint) -> bool {
        self.inner.contains(h_dilate(self.inv, p))
    }
}

/// Union of two sets.
pub struct Union<'a>(pub &'a dyn SetMembership, pub &'a dyn SetMembership);

impl SetMembership for Union<'_> {
    fn contains(&self, p: HPoint) -> bool {
        self.0.contains(p) || self.1.contains(p)
    }
}
