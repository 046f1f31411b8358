//! Textual specs for geometric objects passed on the command line:
//! balls (`cx,cy,cz,r`), named membership sets, named sampled maps,
//! epsilon lists, and search strategies.

use crate::errors::CliError;
use crate::fixtures::BentHalfSpace;
use gapwb_heisenberg::collapse::CollapseStrategy;
use gapwb_heisenberg::cutmeasure::SampledMap;
use gapwb_heisenberg::point::{rho, HPoint};
use gapwb_heisenberg::sets::{BallSet, CentralSlab, HalfSpace, SetMembership};
use gapwb_heisenberg::voxel::VoxelGrid;
use gapwb_heisenberg::HBall;

fn parse_floats(what: &str, s: &str, want: usize) -> Result<Vec<f64>, CliError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let parts = parts
        .map_err(|e| CliError::Precondition(format!("{what}: bad number in {s:?}: {e}")))?;
    if parts.len() != want {
        return Err(CliError::Precondition(format!(
            "{what}: expected {want} comma-separated numbers, got {} in {s:?}",
            parts.len()
        )));
    }
    if parts.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Precondition(format!("{what}: values must be finite in {s:?}")));
    }
    Ok(parts)
}

/// `cx,cy,cz,r` with `r > 0`.
pub fn parse_ball(s: &str) -> Result<HBall, CliError> {
    let v = parse_floats("ball", s, 4)?;
    Ok(HBall::new(HPoint::new(v[0], v[1], v[2]), v[3])?)
}

/// A comma-separated strictly positive epsilon list.
pub fn parse_epsilons(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let eps = parts
        .map_err(|e| CliError::Precondition(format!("epsilons: bad number in {s:?}: {e}")))?;
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(CliError::Precondition(format!(
            "epsilons: need a nonempty list inside (0, 1), got {s:?}"
        )));
    }
    Ok(eps)
}

pub fn parse_strategy(s: &str) -> Result<CollapseStrategy, CliError> {
    match s {
        "grid-scan" => Ok(CollapseStrategy::GridScan),
        "segment-partition" => Ok(CollapseStrategy::SegmentPartition),
        other => Err(CliError::Precondition(format!(
            "strategy: expected grid-scan or segment-partition, got {other:?}"
        ))),
    }
}

/// A named membership set.
///
/// Grammar:
///   half-space:nx,ny,nz,offset   {p : n·p >= offset}
///   slab:z_lo,z_hi               {p : z_lo < p.z < z_hi}
///   ball:cx,cy,cz,r              a metric ball
///   bent:amplitude               {p : p.x >= a·sin(2y)·cos(2z)}
#[derive(Debug, Clone)]
pub enum SetSpec {
    HalfSpace { normal: [f64; 3], offset: f64 },
    Slab { z_lo: f64, z_hi: f64 },
    Ball(HBall),
    Bent { amplitude: f64 },
}

impl SetSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "half-space" => {
                let v = parse_floats("half-space", rest, 4)?;
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if !(norm > 0.0) {
                    return Err(CliError::Precondition(
                        "half-space: normal must be nonzero".into(),
                    ));
                }
                Ok(SetSpec::HalfSpace { normal: [v[0], v[1], v[2]], offset: v[3] })
            }
            "slab" => {
                let v = parse_floats("slab", rest, 2)?;
                if !(v[0] < v[1]) {
                    return Err(CliError::Precondition(format!(
                        "slab: need z_lo < z_hi, got {rest:?}"
                    )));
                }
                Ok(SetSpec::Slab { z_lo: v[0], z_hi: v[1] })
            }
            "ball" => Ok(SetSpec::Ball(parse_ball(rest)?)),
            "bent" => {
                let v = parse_floats("bent", rest, 1)?;
                Ok(SetSpec::Bent { amplitude: v[0] })
            }
            other => Err(CliError::Precondition(format!(
                "unknown set {other:?}; known: half-space:nx,ny,nz,off, slab:lo,hi, \
                 ball:cx,cy,cz,r, bent:amplitude"
            ))),
        }
    }

    pub fn build(&self) -> Box<dyn SetMembership> {
        match *self {
            SetSpec::HalfSpace { normal, offset } => Box::new(HalfSpace { normal, offset }),
            SetSpec::Slab { z_lo, z_hi } => Box::new(CentralSlab { z_lo, z_hi }),
            SetSpec::Ball(b) => Box::new(BallSet(b)),
            SetSpec::Bent { amplitude } => Box::new(BentHalfSpace { amplitude }),
        }
    }
}

/// A named map sampled over a voxel grid.
///
/// Grammar:
///   horizontal            p -> (x, y)          (exactly 1-Lipschitz)
///   coordinate:x|y        p -> x or y
///   dist:cx,cy,cz         p -> rho(p, c)       (1-Lipschitz by triangle)
#[derive(Debug, Clone)]
pub enum MapSpec {
    Horizontal,
    Coordinate(usize),
    Dist(HPoint),
}

impl MapSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        match name {
            "horizontal" => Ok(MapSpec::Horizontal),
            "coordinate" => match rest {
                "x" => Ok(MapSpec::Coordinate(0)),
                "y" => Ok(MapSpec::Coordinate(1)),
                other => Err(CliError::Precondition(format!(
                    "coordinate: expected x or y, got {other:?} (the central coordinate is \
                     not Lipschitz for the metric)"
                ))),
            },
            "dist" => {
                let v = parse_floats("dist", rest, 3)?;
                Ok(MapSpec::Dist(HPoint::new(v[0], v[1], v[2])))
            }
            other => Err(CliError::Precondition(format!(
                "unknown map {other:?}; known: horizontal, coordinate:x|y, dist:cx,cy,cz"
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MapSpec::Horizontal => 2,
            MapSpec::Coordinate(_) | MapSpec::Dist(_) => 1,
        }
    }

    pub fn build(&self, grid: VoxelGrid) -> SampledMap {
        match *self {
            MapSpec::Horizontal => SampledMap::from_fn(grid, 2, |p| vec![p.x, p.y]),
            MapSpec::Coordinate(0) => SampledMap::from_fn(grid, 1, |p| vec![p.x]),
            MapSpec::Coordinate(_) => SampledMap::from_fn(grid, 1, |p| vec![p.y]),
            MapSpec::Dist(c) => SampledMap::from_fn(grid, 1, |p| vec![rho(p, c)]),
        }
    }
}
