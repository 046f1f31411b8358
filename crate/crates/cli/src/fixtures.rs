//! Shipped fixtures: the perturbation suite for the stability experiment,
//! named cut-measure fixtures for scale selection, and the frozen census
//! oracles behind `calibrate-oracle`.

use crate::errors::CliError;
use gapwb_heisenberg::cutmeasure::{cut_measure_of_map, CutAtom, CutMeasure, SampledMap};
use gapwb_heisenberg::perimeter::Census;
use gapwb_heisenberg::point::HPoint;
use gapwb_heisenberg::sets::{HalfSpace, SetMembership};
use gapwb_heisenberg::trace::TraceParams;
use gapwb_heisenberg::voxel::{VoxelGrid, VoxelSet};
use gapwb_heisenberg::{sample_lines, HBall};

/// A half-space whose boundary plane is bent by a smooth bump:
/// `{p : x >= amplitude · sin(2y) · cos(2z)}`. At amplitude 0 this is the
/// exact coordinate half-space; growing the amplitude makes line traces
/// fragment, so non-monotonicity and the best-half-space symmetric
/// difference rise together.
#[derive(Debug, Clone, Copy)]
pub struct BentHalfSpace {
    pub amplitude: f64,
}

impl SetMembership for BentHalfSpace {
    fn contains(&self, p: HPoint) -> bool {
        p.x >= self.amplitude * (2.0 * p.y).sin() * (2.0 * p.z).cos()
    }
}

/// The graded perturbation suite: `n` bent half-spaces with amplitudes
/// evenly spaced over [0.1, 0.3]. The range is chosen so that, on the unit
/// ball, line non-monotonicity grows with the amplitude throughout: below
/// it the bend is barely detectable, while far above it a full wave no
/// longer closes inside a chord, so traces start looking monotone again.
pub fn perturbation_suite(n: usize) -> Vec<BentHalfSpace> {
    assert!(n >= 2, "suite needs at least two amplitudes");
    (0..n)
        .map(|k| BentHalfSpace { amplitude: 0.1 + 0.2 * k as f64 / (n - 1) as f64 })
        .collect()
}

pub const CUT_MEASURE_FIXTURES: [&str; 3] = ["half-space-x", "coordinate-x", "horizontal-xy"];

/// Build one of the named cut-measure fixtures over `ball`, voxelized at
/// edge `h`:
///   half-space-x    one atom, the voxelized `{x >= 0}`, weight 1
///   coordinate-x    superlevel measure of the map `p -> x`
///   horizontal-xy   superlevel measure of the map `p -> (x, y)`
pub fn cut_measure_fixture(
    name: &str,
    ball: &HBall,
    h: f64,
) -> Result<CutMeasure, CliError> {
    let grid = VoxelGrid::cover_ball(ball, h, h)?;
    match name {
        "half-space-x" => {
            let hs = HalfSpace { normal: [1.0, 0.0, 0.0], offset: 0.0 };
            Ok(CutMeasure::new(vec![CutAtom {
                set: VoxelSet::from_predicate(grid, &hs),
                weight: 1.0,
            }])?)
        }
        "coordinate-x" => {
            let map = SampledMap::from_fn(grid, 1, |p| vec![p.x]);
            Ok(cut_measure_of_map(&map, &[fixture_thresholds(ball)])?)
        }
        "horizontal-xy" => {
            let map = SampledMap::from_fn(grid, 2, |p| vec![p.x, p.y]);
            let t = fixture_thresholds(ball);
            Ok(cut_measure_of_map(&map, &[t.clone(), t])?)
        }
        other => Err(CliError::Precondition(format!(
            "unknown cut-measure fixture {other:?}; known: {CUT_MEASURE_FIXTURES:?}"
        ))),
    }
}

/// Eleven equally spaced thresholds spanning the ball's horizontal extent.
fn fixture_thresholds(ball: &HBall) -> Vec<f64> {
    let r = ball.radius / (2.0f64).sqrt();
    (-5..=5).map(|k| ball.center.x + r * k as f64 / 7.0).collect()
}

/// One frozen census oracle: a fully pinned-down sampling recipe together
/// with the class weights it produced when the calibration was recorded.
/// `calibrate-oracle` recomputes the recipe and compares bit-for-bit level
/// agreement (1e-12) against `expected`.
pub struct OracleFixture {
    pub name: &'static str,
    /// Number of sampled lines and the sampler seed.
    pub lines: usize,
    pub seed: u64,
    /// Trace resolution fed to `TraceParams::for_resolution`.
    pub resolution: f64,
    /// Voxel edge for voxelized oracles; `None` means the analytic set.
    pub voxel_h: Option<f64>,
    /// Half-space normal.
    pub normal: [f64; 3],
    /// Recorded leading class weights (delta = 0.25, gamma = 1).
    pub expected: &'static [f64],
}

/// The recorded calibration table. The two recipes pin down the sampling
/// geometry used throughout the test-suite bands: a voxelized coordinate
/// half-space and an analytic central half-space.
pub fn calibration_oracles() -> Vec<OracleFixture> {
    vec![
        OracleFixture {
            name: "half-space-x-voxel",
            lines: 400,
            seed: 23,
            resolution: 1.0 / 32.0,
            voxel_h: Some(1.0 / 16.0),
            normal: [1.0, 0.0, 0.0],
            expected: &[0.39625, 0.2575, 0.03375, 0.01],
        },
        OracleFixture {
            name: "half-space-z-analytic",
            lines: 500,
            seed: 29,
            resolution: 1.0 / 64.0,
            voxel_h: None,
            normal: [0.0, 0.0, 1.0],
            expected: &[0.099, 0.083, 0.017, 0.002],
        },
    ]
}

impl OracleFixture {
    /// Recompute the census this oracle froze, returning the leading class
    /// weights (as many as `expected` records).
    pub fn recompute(&self) -> Result<Vec<f64>, CliError> {
        let ball = HBall::unit();
        let sample = sample_lines(&ball, self.lines, self.seed)?;
        let params = TraceParams::for_resolution(self.resolution);
        let hs = HalfSpace { normal: self.normal, offset: 0.0 };
        let census = match self.voxel_h {
            Some(h) => {
                let grid = VoxelGrid::cover_ball(&ball, h, h)?;
                let set = VoxelSet::from_predicate(grid, &hs);
                Census::collect(&set, &ball, &sample, 0.25, &params, 1.0)
            }
            None => Census::collect(&hs, &ball, &sample, 0.25, &params, 1.0),
        };
        let full = census.weights_full();
        Ok(full[..self.expected.len()].to_vec())
    }
}
