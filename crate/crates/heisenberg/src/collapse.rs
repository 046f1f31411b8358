//! Search for central pairs on which a Lipschitz map nearly collapses.
//!
//! A pair `(p, q)` on one coset of the center has `ρ(p,q) = √|Δz|`, and
//! maps close to coordinates of an `L1` embedding must shrink some such
//! pair well below the Lipschitz bound. Two searches are provided. The
//! grid scan enumerates every sampled central pair at separation at least
//! `ε` and returns the smallest ratio `‖f(p)−f(q)‖₁/ρ(p,q)`; its feasible
//! set only grows as `ε` shrinks, so the reported ratio is monotone. The
//! segment partition walks near-vertical Euclidean segments between
//! seeded neighborhoods of the identity `e` and of `u = (0,0,h)`,
//! partitions the parameter interval into the blocks
//! `J_i = [2i/(2n+1), (2i+1)/(2n+1)]`, scans consecutive block pairs for
//! parameter pairs `(s, t)`, and closes each candidate to the central
//! pair `(v_s, (v_s.x, v_s.y, v_t.z))`.

use crate::ball::HBall;
use crate::cutmeasure::{sample_ball_cells, SampledMap};
use crate::point::{rho, same_central_coset, HPoint};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollapseStrategy {
    /// Exhaustive scan of sampled central pairs.
    GridScan,
    /// Block search along near-vertical segments.
    SegmentPartition,
}

/// Tunables for the search; the defaults follow the geometry of the
/// construction (`√u_height` lands in `[1/4, 1/2]`, neighborhood and
/// block counts scale as the recorded powers of `ε`).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseParams {
    /// Height of the second segment endpoint `u = (0, 0, u_height)`.
    pub u_height: f64,
    /// Neighborhood radius exponent: bases are drawn within `ε^exp_nbhd`.
    pub exp_nbhd: f64,
    /// Block count exponent: `n ≈ ε^{-exp_block}` blocks.
    pub exp_block: f64,
    /// Number of seeded base pairs (the exact pair `(e, u)` always leads).
    pub bases: usize,
    /// Parameter samples per block.
    pub block_samples: usize,
    /// Allowed excess over 1 in the Lipschitz validation.
    pub lipschitz_tol: f64,
    /// Number of seeded site pairs used by the Lipschitz validation.
    pub lipschitz_pairs: usize,
}

impl Default for CollapseParams {
    fn default() -> Self {
        CollapseParams {
            u_height: 1.0 / 9.0,
            exp_nbhd: 1.0 / 9.0,
            exp_block: 1.0 / 45.0,
            bases: 8,
            block_samples: 3,
            lipschitz_tol: 1e-9,
            lipschitz_pairs: 2000,
        }
    }
}

#[derive(Debug, Error)]
pub enum CollapseError {
    #[error(
        "map is not 1-Lipschitz on samples: ratio {ratio} at ({px},{py},{pz})–({qx},{qy},{qz})"
    )]
    NotLipschitz { ratio: f64, px: f64, py: f64, pz: f64, qx: f64, qy: f64, qz: f64 },
    #[error("no central pair at separation ≥ {epsilon} was found")]
    NoPairs { epsilon: f64 },
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
}

/// The best central pair found by a collapse search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CollapseReport {
    pub epsilon: f64,
    pub strategy: CollapseStrategy,
    pub p: HPoint,
    pub q: HPoint,
    /// `ρ(p, q)`.
    pub r: f64,
    /// `‖f(p)−f(q)‖₁ / ρ(p, q)`.
    pub ratio: f64,
    /// Largest sampled Lipschitz ratio seen during validation.
    pub lipschitz_max: f64,
}

/// Validate near-1-Lipschitzness of the sampled map over seeded cell
/// pairs at separation at least `floor`. Returns the largest ratio seen.
pub fn validate_lipschitz(
    map: &SampledMap,
    ball: &HBall,
    floor: f64,
    tol: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64, CollapseError> {
    let sites = sample_ball_cells(&map.grid, ball, 2 * pairs, seed);
    let mut max_ratio: f64 = 0.0;
    for chunk in sites.chunks_exact(2) {
        let (p, q) = (chunk[0], chunk[1]);
        let dist = rho(p, q);
        if dist < floor {
            continue;
        }
        let ratio = map.l1_dist(p, q) / dist;
        if ratio > max_ratio {
            max_ratio = ratio;
        }
        if ratio > 1.0 + tol {
            return Err(CollapseError::NotLipschitz {
                ratio,
                px: p.x,
                py: p.y,
                pz: p.z,
                qx: q.x,
                qy: q.y,
                qz: q.z,
            });
        }
    }
    Ok(max_ratio)
}

struct Candidate {
    p: HPoint,
    q: HPoint,
    r: f64,
    ratio: f64,
}

fn better(best: &Option<Candidate>, ratio: f64) -> bool {
    best.as_ref().map_or(true, |b| ratio < b.ratio)
}

fn grid_scan(map: &SampledMap, ball: &HBall, epsilon: f64) -> Option<Candidate> {
    let grid = &map.grid;
    let mut best: Option<Candidate> = None;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            // One vertical column: cells share exact (x, y), so every
            // in-ball pair is exactly central with ρ = √|Δz|.
            let column: Vec<usize> = (0..grid.nz)
                .filter(|&k| ball.contains(grid.cell_center(i, j, k)))
                .collect();
            for (a_pos, &ka) in column.iter().enumerate() {
                let pa = grid.cell_center(i, j, ka);
                let ia = grid.flat_index(i, j, ka);
                for &kb in &column[a_pos + 1..] {
                    let pb = grid.cell_center(i, j, kb);
                    let r = rho(pa, pb);
                    if r < epsilon {
                        continue;
                    }
                    let ib = grid.flat_index(i, j, kb);
                    let l1: f64 =
                        map.coords.iter().map(|c| (c[ia] - c[ib]).abs()).sum();
                    let ratio = l1 / r;
                    if better(&best, ratio) {
                        best = Some(Candidate { p: pa, q: pb, r, ratio });
                    }
                }
            }
        }
    }
    best
}

/// Draw a point of `B_radius(center)` by rejection from its bounding box.
fn sample_in_ball(ball: &HBall, rng: &mut ChaCha8Rng) -> HPoint {
    let ([x0, x1], [y0, y1], [z0, z1]) = ball.bounding_box();
    loop {
        let p = HPoint::new(
            rng.gen_range(x0..x1),
            rng.gen_range(y0..y1),
            rng.gen_range(z0..z1),
        );
        if ball.contains(p) {
            return p;
        }
    }
}

fn segment_partition(
    map: &SampledMap,
    ball: &HBall,
    epsilon: f64,
    params: &CollapseParams,
    seed: u64,
) -> Option<Candidate> {
    let e = HPoint::new(0.0, 0.0, 0.0);
    let u = HPoint::new(0.0, 0.0, params.u_height);
    let nbhd = epsilon.powf(params.exp_nbhd);
    let near_e = HBall { center: e, radius: nbhd };
    let near_u = HBall { center: u, radius: nbhd };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bases = vec![(e, u)];
    for _ in 1..params.bases.max(1) {
        bases.push((sample_in_ball(&near_e, &mut rng), sample_in_ball(&near_u, &mut rng)));
    }

    let n = epsilon.powf(-params.exp_block).round().max(1.0) as usize;
    let denom = (2 * n + 1) as f64;
    let samples = params.block_samples.max(1);
    let block_ts = |i: usize| -> Vec<f64> {
        let lo = 2.0 * i as f64 / denom;
        let hi = (2.0 * i as f64 + 1.0) / denom;
        (0..samples)
            .map(|s| lo + (hi - lo) * (s as f64 + 0.5) / samples as f64)
            .collect()
    };

    let mut best: Option<Candidate> = None;
    for (p0, q0) in bases {
        let at = |t: f64| {
            HPoint::new(
                p0.x + t * (q0.x - p0.x),
                p0.y + t * (q0.y - p0.y),
                p0.z + t * (q0.z - p0.z),
            )
        };
        for i in 0..n {
            for &s in &block_ts(i) {
                let vs = at(s);
                if !ball.contains(vs) {
                    continue;
                }
                for &t in &block_ts(i + 1) {
                    let vt = at(t);
                    // Close the candidate to an exactly-central pair.
                    let w = HPoint::new(vs.x, vs.y, vt.z);
                    let r = rho(vs, w);
                    if r < epsilon || !ball.contains(w) {
                        continue;
                    }
                    let ratio = map.l1_dist(vs, w) / r;
                    if better(&best, ratio) {
                        best = Some(Candidate { p: vs, q: w, r, ratio });
                    }
                }
            }
        }
    }
    best
}

/// Search for the central pair with the smallest Lipschitz ratio at
/// separation at least `epsilon`, after validating the map's Lipschitz
/// precondition on seeded samples.
pub fn collapse_search(
    map: &SampledMap,
    ball: &HBall,
    epsilon: f64,
    strategy: CollapseStrategy,
    params: &CollapseParams,
    seed: u64,
) -> Result<CollapseReport, CollapseError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CollapseError::BadEpsilon(epsilon));
    }
    let lipschitz_max = validate_lipschitz(
        map,
        ball,
        epsilon,
        params.lipschitz_tol,
        params.lipschitz_pairs,
        seed ^ 0x9e37_79b9_7f4a_7c15,
    )?;
    let found = match strategy {
        CollapseStrategy::GridScan => grid_scan(map, ball, epsilon),
        CollapseStrategy::SegmentPartition => {
            segment_partition(map, ball, epsilon, params, seed)
        }
    };
    let c = found.ok_or(CollapseError::NoPairs { epsilon })?;
    debug_assert!(same_central_coset(c.p, c.q));
    Ok(CollapseReport {
        epsilon,
        strategy,
        p: c.p,
        q: c.q,
        r: c.r,
        ratio: c.ratio,
        lipschitz_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::grid_metric;
    use crate::point::ORIGIN;
    use crate::voxel::VoxelGrid;
    use gapwb_core::cutcone::{CutAtom as CoreAtom, CutDecomposition};

    fn unit_ball_map(dim: usize, f: impl Fn(HPoint) -> Vec<f64>) -> (SampledMap, HBall) {
        let ball = HBall::unit();
        let grid = VoxelGrid::cover_ball(&ball, 1.0 / 16.0, 1.0 / 16.0).unwrap();
        (SampledMap::from_fn(grid, dim, f), ball)
    }

    #[test]
    fn horizontal_coordinates_collapse_completely() {
        let (map, ball) = unit_ball_map(2, |p| vec![p.x, p.y]);
        for strategy in [CollapseStrategy::GridScan, CollapseStrategy::SegmentPartition] {
            let rep = collapse_search(
                &map,
                &ball,
                1.0 / 8.0,
                strategy,
                &CollapseParams::default(),
                3,
            )
            .unwrap();
            assert_eq!(rep.ratio, 0.0, "{strategy:?} must find an exactly collapsed pair");
            assert!(rep.r >= 1.0 / 8.0);
            assert!(same_central_coset(rep.p, rep.q));
            assert!(rep.lipschitz_max <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn grid_embedding_coordinate_collapses_strictly() {
        // A seeded cut decomposition over the 27 grid points (singleton
        // cuts plus random masks), rescaled to be non-expansive for ρ; one
        // coordinate of its embedding is carried to the voxel cells
        // covering the grid. Every central pair must contract strictly,
        // and the search must find the best of them.
        let (points, metric) = grid_metric(2).unwrap();
        let n = points.len();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut atoms: Vec<CoreAtom> = (0..n)
            .map(|i| CoreAtom { mask: 1u32 << i, weight: rng.gen_range(0.05..0.5) })
            .collect();
        for _ in 0..40 {
            atoms.push(CoreAtom {
                mask: rng.gen_range(1u32..(1u32 << n) - 1),
                weight: rng.gen_range(0.1..1.0),
            });
        }
        let dec = CutDecomposition { n, atoms };
        let mut lip: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                lip = lip.max(dec.eval(i, j) / metric.dist(i, j));
            }
        }
        let embedding = dec.embedding();
        let coord = n; // the first non-singleton coordinate
        let grid =
            VoxelGrid::cover([-0.5, -0.5, -0.5], [2.5, 2.5, 2.5], 1.0, 1.0).unwrap();
        assert_eq!(grid.len(), 27);
        let map = SampledMap::from_fn(grid, 1, |p| {
            let idx = points
                .iter()
                .position(|g| {
                    (g.x - p.x).abs() < 0.5 && (g.y - p.y).abs() < 0.5 && (g.z - p.z).abs() < 0.5
                })
                .expect("each cell center is a grid point");
            vec![embedding[idx][coord] / lip]
        });
        let ball = HBall::new(HPoint::new(1.0, 1.0, 1.0), 4.0).unwrap();
        let rep = collapse_search(
            &map,
            &ball,
            1.0 / 8.0,
            CollapseStrategy::GridScan,
            &CollapseParams::default(),
            5,
        )
        .unwrap();
        // Direct scan over the grid's central pairs: none is preserved at
        // full scale, and the report's ratio is their minimum.
        let mut max_ratio: f64 = 0.0;
        let mut min_ratio = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                if same_central_coset(points[i], points[j]) {
                    let ratio = (embedding[i][coord] - embedding[j][coord]).abs()
                        / (lip * metric.dist(i, j));
                    max_ratio = max_ratio.max(ratio);
                    min_ratio = min_ratio.min(ratio);
                }
            }
        }
        assert!(max_ratio < 1.0, "central pairs must all contract, worst {max_ratio}");
        assert!(rep.ratio < 1.0, "search must report a contracted pair: {}", rep.ratio);
        assert!((rep.ratio - min_ratio).abs() <= 1e-12, "{} vs {min_ratio}", rep.ratio);
        assert!(rep.r >= 1.0 / 8.0);
    }

    #[test]
    fn ratio_is_monotone_as_epsilon_shrinks() {
        let anchor = HPoint::new(2.0, 0.0, 0.0);
        let (map, ball) = unit_ball_map(1, |p| vec![rho(p, anchor)]);
        let mut last = f64::INFINITY;
        for e in [0.25, 0.125, 0.0625, 0.03125, 0.015625] {
            let rep = collapse_search(
                &map,
                &ball,
                e,
                CollapseStrategy::GridScan,
                &CollapseParams::default(),
                4,
            )
            .unwrap();
            assert!(
                rep.ratio <= last + 1e-15,
                "smaller ε only enlarges the search: {} then {}",
                last,
                rep.ratio
            );
            last = rep.ratio;
        }
        assert!(last < 1.0, "the distance map must contract central pairs somewhere");
    }

    #[test]
    fn segment_partition_finds_short_vertical_pairs() {
        let anchor = HPoint::new(2.0, 0.0, 0.0);
        let (map, ball) = unit_ball_map(1, |p| vec![rho(p, anchor)]);
        let rep = collapse_search(
            &map,
            &ball,
            1.0 / 16.0,
            CollapseStrategy::SegmentPartition,
            &CollapseParams::default(),
            9,
        )
        .unwrap();
        assert!(same_central_coset(rep.p, rep.q));
        assert!(rep.r >= 1.0 / 16.0);
        assert!(rep.ratio <= 1.0 + 1e-9);
        // The construction scans near-vertical segments close to the
        // center: horizontal coordinates stay below the neighborhood
        // radius over √2.
        assert!(rep.p.x.abs() <= 0.6 && rep.p.y.abs() <= 0.6);
    }

    #[test]
    fn non_lipschitz_maps_are_rejected_with_the_pair() {
        let (map, ball) = unit_ball_map(1, |p| vec![3.0 * p.x]);
        let err = collapse_search(
            &map,
            &ball,
            1.0 / 8.0,
            CollapseStrategy::GridScan,
            &CollapseParams::default(),
            7,
        )
        .unwrap_err();
        match err {
            CollapseError::NotLipschitz { ratio, .. } => assert!(ratio > 1.0),
            other => panic!("expected a Lipschitz failure, got {other:?}"),
        }
    }

    #[test]
    fn a_single_layer_has_no_central_pairs() {
        let grid =
            VoxelGrid::cover([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5], 1.0 / 8.0, 1.0).unwrap();
        let map = SampledMap::from_fn(grid, 1, |p| vec![p.x]);
        let ball = HBall::new(ORIGIN, 0.7).unwrap();
        let err = collapse_search(
            &map,
            &ball,
            1.0 / 8.0,
            CollapseStrategy::GridScan,
            &CollapseParams::default(),
            2,
        )
        .unwrap_err();
        assert!(matches!(err, CollapseError::NoPairs { .. }));
    }
}
