//! Points of the Heisenberg group, its group law, dilations, and the
//! explicit negative-type metric `rho`.
//!
//! The group is `R^3` with the product
//! `(a,b,c)·(x,y,z) = (a+x, b+y, c+z+ay-bx)`; its center is the `z`-axis,
//! and the anisotropic dilation `(x,y,z) -> (sx, sy, s^2 z)` scales `rho`
//! exactly by `s`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use thiserror::Error;

/// Tolerance used when comparing coordinates for coset membership.
pub const COSET_TOL: f64 = 1e-12;

/// A point of the Heisenberg group, stored in ambient coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// The identity element `(0,0,0)`.
pub const ORIGIN: HPoint = HPoint { x: 0.0, y: 0.0, z: 0.0 };

impl HPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        HPoint { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

// Points serialize as the compact `[x, y, z]` triple.
impl Serialize for HPoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y, self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for HPoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 3]>::deserialize(d)?;
        let p = HPoint::new(v[0], v[1], v[2]);
        if !p.is_finite() {
            return Err(D::Error::custom("point coordinates must be finite"));
        }
        Ok(p)
    }
}

#[derive(Debug, Error)]
pub enum PointError {
    #[error("dilation factor must be positive, got {0}")]
    BadDilation(f64),
}

/// Group product `g·h`.
pub fn h_mul(g: HPoint, h: HPoint) -> HPoint {
    HPoint {
        x: g.x + h.x,
        y: g.y + h.y,
        z: g.z + h.z + g.x * h.y - g.y * h.x,
    }
}

/// Group inverse `(-a,-b,-c)`.
pub fn h_inv(g: HPoint) -> HPoint {
    HPoint { x: -g.x, y: -g.y, z: -g.z }
}

/// Anisotropic dilation `(x,y,z) -> (sx, sy, s^2 z)`; scales `rho` by `s`.
pub fn try_h_dilate(s: f64, g: HPoint) -> Result<HPoint, PointError> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(PointError::BadDilation(s));
    }
    Ok(HPoint { x: s * g.x, y: s * g.y, z: s * s * g.z })
}

/// Infallible dilation for internal use; panics on a non-positive factor.
pub fn h_dilate(s: f64, g: HPoint) -> HPoint {
    try_h_dilate(s, g).expect("dilation factor must be positive")
}

/// The explicit homogeneous metric on `R^3`:
///
/// `rho((x,y,z),(t,u,v)) = ( sqrt( ((t-x)^2+(u-y)^2)^2 + (v-z+2xu-2yt)^2 )
///                           + (t-x)^2 + (u-y)^2 )^(1/2)`.
pub fn rho(p: HPoint, q: HPoint) -> f64 {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    let horiz = dx * dx + dy * dy;
    let central = q.z - p.z + 2.0 * p.x * q.y - 2.0 * p.y * q.x;
    ((horiz * horiz + central * central).sqrt() + horiz).sqrt()
}

/// A companion group law under which `rho` is exactly left-invariant:
/// `(a,b,c) ⊙ (x,y,z) = (a+x, b+y, c+z+2bx-2ay)`.
///
/// The standard product `h_mul` is left-invariant for the
/// Carnot–Caratheodory metric but only bi-Lipschitz for `rho`; this twisted
/// product matches `rho`'s own central term, so `rho(g⊙p, g⊙q) = rho(p,q)`
/// holds as an algebraic identity. Both laws share the same center and
/// the same central cosets.
pub fn rho_compatible_mul(g: HPoint, h: HPoint) -> HPoint {
    HPoint {
        x: g.x + h.x,
        y: g.y + h.y,
        z: g.z + h.z + 2.0 * g.y * h.x - 2.0 * g.x * h.y,
    }
}

/// True when `p` and `q` lie on the same coset of the center, i.e. share
/// their `x` and `y` coordinates up to `COSET_TOL`.
pub fn same_central_coset(p: HPoint, q: HPoint) -> bool {
    (p.x - q.x).abs() <= COSET_TOL && (p.y - q.y).abs() <= COSET_TOL
}

#[derive(Debug, Error)]
pub enum WordMetricError {
    #[error("word distance exceeds the cap {cap}")]
    Capped { cap: u32 },
    #[error("breadth-first search visited more than {limit} states")]
    StateLimit { limit: usize },
    #[error("word metric needs integer coordinates, got ({x}, {y}, {z})")]
    NotInteger { x: f64, y: f64, z: f64 },
}

const BFS_STATE_LIMIT: usize = 1_000_000;

fn as_int_triple(p: HPoint) -> Result<(i64, i64, i64), WordMetricError> {
    let check = |v: f64| -> Option<i64> {
        let r = v.round();
        if (v - r).abs() <= 1e-9 && r.abs() < 1e15 {
            Some(r as i64)
        } else {
            None
        }
    };
    match (check(p.x), check(p.y), check(p.z)) {
        (Some(x), Some(y), Some(z)) => Ok((x, y, z)),
        _ => Err(WordMetricError::NotInteger { x: p.x, y: p.y, z: p.z }),
    }
}

/// Shortest-path distance between `g` and `h` in the Cayley graph of the
/// integer Heisenberg group with generators
/// `{(±1,0,0), (0,±1,0), (0,0,±1)}`, by breadth-first search from the
/// identity to `g⁻¹·h`. Distances larger than `cap` return
/// [`WordMetricError::Capped`].
pub fn word_metric(g: HPoint, h: HPoint, cap: u32) -> Result<u32, WordMetricError> {
    as_int_triple(g)?;
    as_int_triple(h)?;
    let target = h_mul(h_inv(g), h);
    let (tx, ty, tz) = as_int_triple(target)?;
    if (tx, ty, tz) == (0, 0, 0) {
        return Ok(0);
    }
    let gens: [(i64, i64, i64); 6] =
        [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)];
    let mut dist: HashMap<(i64, i64, i64), u32> = HashMap::new();
    dist.insert((0, 0, 0), 0);
    let mut frontier = vec![(0i64, 0i64, 0i64)];
    for depth in 1..=cap {
        let mut next = Vec::new();
        for &(x, y, z) in &frontier {
            for &(a, b, c) in &gens {
                // (x,y,z)·(a,b,c) = (x+a, y+b, z+c+xb-ya)
                let n = (x + a, y + b, z + c + x * b - y * a);
                if n == (tx, ty, tz) {
                    return Ok(depth);
                }
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(n) {
                    e.insert(depth);
                    next.push(n);
                }
            }
        }
        if dist.len() > BFS_STATE_LIMIT {
            return Err(WordMetricError::StateLimit { limit: BFS_STATE_LIMIT });
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    Err(WordMetricError::Capped { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ~ {b} (tol {tol})");
    }

    fn random_point(rng: &mut ChaCha8Rng, scale: f64) -> HPoint {
        HPoint::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn group_law_fixtures() {
        let p = HPoint::new(5.0, -2.0, 7.0);
        assert_eq!(h_mul(ORIGIN, p), p);
        assert_eq!(h_mul(p, ORIGIN), p);
        // Cross term: c + z + a*y' - b*x' with a=1, b=0, x'=0, y'=1.
        assert_eq!(h_mul(HPoint::new(1.0, 0.0, 0.0), HPoint::new(0.0, 1.0, 0.0)), HPoint::new(1.0, 1.0, 1.0));
        let q = HPoint::new(1.0, 2.0, 3.0);
        assert_eq!(h_mul(q, h_inv(q)), ORIGIN);
        assert_eq!(h_mul(h_inv(q), q), ORIGIN);
    }

    #[test]
    fn group_law_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = random_point(&mut rng, 5.0);
            let b = random_point(&mut rng, 5.0);
            let c = random_point(&mut rng, 5.0);
            let left = h_mul(h_mul(a, b), c);
            let right = h_mul(a, h_mul(b, c));
            assert_close(left.x, right.x, 1e-12);
            assert_close(left.y, right.y, 1e-12);
            assert_close(left.z, right.z, 1e-10);
        }
    }

    #[test]
    fn rho_fixtures() {
        // Central unit step: inner bracket [0 + 1]^(1/2) = 1, outer sqrt(1).
        assert_close(rho(ORIGIN, HPoint::new(0.0, 0.0, 1.0)), 1.0, 1e-15);
        // Horizontal unit step: [1 + 0]^(1/2) + 1 = 2, sqrt(2).
        assert_close(rho(ORIGIN, HPoint::new(1.0, 0.0, 0.0)), 2f64.sqrt(), 1e-15);
        let p = HPoint::new(3.0, -1.0, 0.5);
        assert_eq!(rho(p, p), 0.0);
        let q = HPoint::new(-2.0, 0.25, 4.0);
        assert_close(rho(p, q), rho(q, p), 1e-14);
    }

    #[test]
    fn rho_triangle_inequality_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10_000 {
            let a = random_point(&mut rng, 10.0);
            let b = random_point(&mut rng, 10.0);
            let c = random_point(&mut rng, 10.0);
            let slack = rho(a, c) - rho(a, b) - rho(b, c);
            assert!(slack <= 1e-12, "triangle violation {slack} at {a:?} {b:?} {c:?}");
        }
    }

    #[test]
    fn dilation_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..100 {
            let p = random_point(&mut rng, 5.0);
            let q = random_point(&mut rng, 5.0);
            let base = rho(p, q);
            for &s in &[0.5, 2.0, 3.0, std::f64::consts::E] {
                let scaled = rho(h_dilate(s, p), h_dilate(s, q));
                assert_close(scaled, s * base, 1e-12 * (1.0 + s * base));
            }
        }
        assert_eq!(h_dilate(2.0, HPoint::new(1.0, 1.0, 1.0)), HPoint::new(2.0, 2.0, 4.0));
        assert!(try_h_dilate(0.0, ORIGIN).is_err());
        assert!(try_h_dilate(-1.0, ORIGIN).is_err());
    }

    #[test]
    fn rho_exactly_invariant_under_compatible_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..500 {
            let g = random_point(&mut rng, 5.0);
            let p = random_point(&mut rng, 5.0);
            let q = random_point(&mut rng, 5.0);
            let moved = rho(rho_compatible_mul(g, p), rho_compatible_mul(g, q));
            assert_close(moved, rho(p, q), 1e-9 * (1.0 + rho(p, q)));
        }
    }

    #[test]
    fn rho_invariance_defect_under_standard_action_is_measurable() {
        // Under the standard product the central term picks up
        // 3a(u-y) - 3b(t-x); this fixture documents that the defect is real,
        // which is why the invariance test above uses the companion action.
        let g = HPoint::new(1.0, 0.0, 0.0);
        let p = ORIGIN;
        let q = HPoint::new(0.0, 1.0, 0.0);
        let moved = rho(h_mul(g, p), h_mul(g, q));
        assert!((moved - rho(p, q)).abs() > 0.1, "expected a visible defect, got {moved}");
    }

    #[test]
    fn central_coset_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let unit = rho(ORIGIN, HPoint::new(0.0, 0.0, 1.0));
        for _ in 0..100 {
            let p = random_point(&mut rng, 5.0);
            let t: f64 = rng.gen_range(0.01..4.0);
            let q = h_mul(p, HPoint::new(0.0, 0.0, t));
            assert!(same_central_coset(p, q));
            assert_close(rho(p, q), t.sqrt() * unit, 1e-12);
        }
    }

    #[test]
    fn central_coset_predicate() {
        assert!(same_central_coset(HPoint::new(1.0, 2.0, 0.0), HPoint::new(1.0, 2.0, 5.0)));
        assert!(!same_central_coset(HPoint::new(1.0, 2.0, 0.0), HPoint::new(1.0, 3.0, 0.0)));
    }

    #[test]
    fn word_metric_fixtures() {
        let e = ORIGIN;
        assert_eq!(word_metric(e, e, 10).unwrap(), 0);
        assert_eq!(word_metric(e, HPoint::new(0.0, 0.0, 1.0), 10).unwrap(), 1);
        assert_eq!(word_metric(e, HPoint::new(1.0, 0.0, 0.0), 10).unwrap(), 1);
        // The commutator of the two horizontal generators equals (0,0,2),
        // reachable in 4 steps; the central generator does it in 2.
        let x = HPoint::new(1.0, 0.0, 0.0);
        let y = HPoint::new(0.0, 1.0, 0.0);
        let comm = h_mul(h_mul(h_mul(x, y), h_inv(x)), h_inv(y));
        assert_eq!(comm, HPoint::new(0.0, 0.0, 2.0));
        assert_eq!(word_metric(e, comm, 10).unwrap(), 2);
        assert_eq!(word_metric(e, HPoint::new(2.0, 3.0, 0.0), 20).unwrap(), 5);
        match word_metric(e, HPoint::new(9.0, 9.0, 0.0), 3) {
            Err(WordMetricError::Capped { cap: 3 }) => {}
            other => panic!("expected a capped-distance signal, got {other:?}"),
        }
        assert!(word_metric(e, HPoint::new(0.5, 0.0, 0.0), 10).is_err());
    }

    #[test]
    fn word_metric_is_symmetric_and_left_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20 {
            let g = HPoint::new(
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
            );
            let h = HPoint::new(
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
                rng.gen_range(-2i32..=2) as f64,
            );
            let d = word_metric(g, h, 30).unwrap();
            assert_eq!(word_metric(h, g, 30).unwrap(), d);
            let t = HPoint::new(1.0, -1.0, 2.0);
            assert_eq!(word_metric(h_mul(t, g), h_mul(t, h), 30).unwrap(), d);
        }
    }

    #[test]
    fn point_json_is_a_triple() {
        let p = HPoint::new(1.5, -2.0, 0.25);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[1.5,-2.0,0.25]");
        let back: HPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<HPoint>("[1.0,2.0]").is_err());
    }
}
