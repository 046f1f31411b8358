//! Axis-aligned voxel grids and occupancy sets.
//!
//! Grids are anisotropic: the `z` edge length may differ from the `x`/`y`
//! edge (typically `h_z = h²`, matching the dilation structure so that
//! central resolution tracks horizontal resolution). A `VoxelSet` stores
//! one occupancy bit per cell; membership outside the box is `false`.

use crate::point::HPoint;
use crate::sets::SetMembership;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

/// Hard cap on cell count (2^27), keeping bitsets within ~16 MiB.
pub const MAX_VOXELS: usize = 1 << 27;

const MAGIC: &[u8; 8] = b"GWVX0001";

#[derive(Debug, Error)]
pub enum VoxelError {
    #[error("voxel grid of {cells} cells exceeds the cap {MAX_VOXELS}; sample a subset or coarsen h")]
    TooLarge { cells: u128 },
    #[error("voxel edge lengths must be positive, got h={h}, hz={hz}")]
    BadEdge { h: f64, hz: f64 },
    #[error("degenerate box: min must be strictly below max on every axis")]
    BadBox,
    #[error("bad voxel file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Geometry of a voxel grid: box corner, edge lengths, and cell counts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct VoxelGrid {
    pub min: [f64; 3],
    pub h: f64,
    pub hz: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl VoxelGrid {
    /// Cover `[min, max]` with cells of edge `h` horizontally and `hz`
    /// vertically. Cell counts round up so the box is fully covered.
    pub fn cover(min: [f64; 3], max: [f64; 3], h: f64, hz: f64) -> Result<Self, VoxelError> {
        if !(h > 0.0) || !(hz > 0.0) || !h.is_finite() || !hz.is_finite() {
            return Err(VoxelError::BadEdge { h, hz });
        }
        if !(min[0] < max[0] && min[1] < max[1] && min[2] < max[2]) {
            return Err(VoxelError::BadBox);
        }
        let nx = ((max[0] - min[0]) / h).ceil() as u128;
        let ny = ((max[1] - min[1]) / h).ceil() as u128;
        let nz = ((max[2] - min[2]) / hz).ceil() as u128;
        let cells = nx * ny * nz;
        if cells == 0 || cells > MAX_VOXELS as u128 {
            return Err(VoxelError::TooLarge { cells });
        }
        Ok(VoxelGrid { min, h, hz, nx: nx as usize, ny: ny as usize, nz: nz as usize })
    }

    /// Grid over a ball's bounding box with `hz = h²·(z-extent/xy-extent)`
    /// scaled so both axes get comparable cell counts; callers that need
    /// the strict `hz = h²` anisotropy use [`VoxelGrid::cover`] directly.
    pub fn cover_ball(ball: &crate::ball::HBall, h: f64, hz: f64) -> Result<Self, VoxelError> {
        let (bx, by, bz) = ball.bounding_box();
        Self::cover([bx[0], by[0], bz[0]], [bx[1], by[1], bz[1]], h, hz)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of a single cell.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.hz
    }

    pub fn cell_center(&self, i: usize, j: usize, k: usize) -> HPoint {
        HPoint::new(
            self.min[0] + (i as f64 + 0.5) * self.h,
            self.min[1] + (j as f64 + 0.5) * self.h,
            self.min[2] + (k as f64 + 0.5) * self.hz,
        )
    }

    pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.ny + j) * self.nx + i
    }

    /// Cell containing `p`, or `None` outside the box.
    pub fn locate(&self, p: HPoint) -> Option<(usize, usize, usize)> {
        let fx = (p.x - self.min[0]) / self.h;
        let fy = (p.y - self.min[1]) / self.h;
        let fz = (p.z - self.min[2]) / self.hz;
        if fx < 0.0 || fy < 0.0 || fz < 0.0 {
            return None;
        }
        let (i, j, k) = (fx as usize, fy as usize, fz as usize);
        if i >= self.nx || j >= self.ny || k >= self.nz {
            return None;
        }
        Some((i, j, k))
    }

    /// Cell of the nearest grid point to `p`, clamping into the box.
    pub fn locate_clamped(&self, p: HPoint) -> (usize, usize, usize) {
        let clamp = |f: f64, n: usize| -> usize {
            if f < 0.0 {
                0
            } else {
                (f as usize).min(n - 1)
            }
        };
        (
            clamp((p.x - self.min[0]) / self.h, self.nx),
            clamp((p.y - self.min[1]) / self.h, self.ny),
            clamp((p.z - self.min[2]) / self.hz, self.nz),
        )
    }

    /// Iterate all cell centers in flat-index order.
    pub fn centers(&self) -> impl Iterator<Item = HPoint> + '_ {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        (0..nz).flat_map(move |k| {
            (0..ny).flat_map(move |j| (0..nx).map(move |i| self.cell_center(i, j, k)))
        })
    }
}

/// A voxelized subset: one occupancy bit per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    pub grid: VoxelGrid,
    bits: Vec<u64>,
}

impl VoxelSet {
    pub fn empty(grid: VoxelGrid) -> Self {
        let words = grid.len().div_ceil(64);
        VoxelSet { grid, bits: vec![0; words] }
    }

    /// Occupy every cell whose center satisfies the predicate.
    pub fn from_predicate(grid: VoxelGrid, pred: &dyn SetMembership) -> Self {
        let mut set = VoxelSet::empty(grid);
        let mut idx = 0;
        for k in 0..grid.nz {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    if pred.contains(grid.cell_center(i, j, k)) {
                        set.bits[idx / 64] |= 1u64 << (idx % 64);
                    }
                    idx += 1;
                }
            }
        }
        set
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        let idx = self.grid.flat_index(i, j, k);
        self.bits[idx / 64] >> (idx % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: bool) {
        let idx = self.grid.flat_index(i, j, k);
        if value {
            self.bits[idx / 64] |= 1u64 << (idx % 64);
        } else {
            self.bits[idx / 64] &= !(1u64 << (idx % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Occupied fraction of the grid.
    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.grid.len() as f64
    }

    /// Lebesgue volume of the occupied cells.
    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.grid.cell_volume()
    }

    /// Cells differing from `other` (same grid required).
    pub fn symmetric_difference_count(&self, other: &VoxelSet) -> Option<usize> {
        if self.grid != other.grid {
            return None;
        }
        Some(self.bits.iter().zip(&other.bits).map(|(a, b)| (a ^ b).count_ones() as usize).sum())
    }

    /// Copy with a seeded random fraction of cells flipped.
    pub fn with_flipped(&self, fraction: f64, seed: u64) -> VoxelSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = self.clone();
        let n = self.grid.len();
        for idx in 0..n {
            if rng.gen::<f64>() < fraction {
                out.bits[idx / 64] ^= 1u64 << (idx % 64);
            }
        }
        out
    }

    /// Serialize to the binary voxel format (versioned magic, little-endian
    /// header, packed 64-bit words).
    pub fn write_to(&self, w: &mut dyn Write) -> Result<(), VoxelError> {
        w.write_all(MAGIC)?;
        for dim in [self.grid.nx as u64, self.grid.ny as u64, self.grid.nz as u64] {
            w.write_all(&dim.to_le_bytes())?;
        }
        for v in [
            self.grid.min[0],
            self.grid.min[1],
            self.grid.min[2],
            self.grid.h,
            self.grid.hz,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for word in &self.bits {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut dyn Read) -> Result<Self, VoxelError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(VoxelError::Format(format!("bad magic {magic:?}")));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut dyn Read| -> Result<u64, VoxelError> {
            r.read_exact(&mut u64buf)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let nx = read_u64(r)? as usize;
        let ny = read_u64(r)? as usize;
        let nz = read_u64(r)? as usize;
        let cells = nx as u128 * ny as u128 * nz as u128;
        if cells == 0 || cells > MAX_VOXELS as u128 {
            return Err(VoxelError::TooLarge { cells });
        }
        let mut f64buf = [0u8; 8];
        let mut read_f64 = |r: &mut dyn Read| -> Result<f64, VoxelError> {
            r.read_exact(&mut f64buf)?;
            Ok(f64::from_le_bytes(f64buf))
        };
        let min = [read_f64(r)?, read_f64(r)?, read_f64(r)?];
        let h = read_f64(r)?;
        let hz = read_f64(r)?;
        if !(h > 0.0) || !(hz > 0.0) {
            return Err(VoxelError::Format("non-positive voxel edges".into()));
        }
        let grid = VoxelGrid { min, h, hz, nx, ny, nz };
        let words = grid.len().div_ceil(64);
        let mut bits = vec![0u64; words];
        let mut buf = [0u8; 8];
        for word in bits.iter_mut() {
            r.read_exact(&mut buf)?;
            *word = u64::from_le_bytes(buf);
        }
        Ok(VoxelSet { grid, bits })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), VoxelError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, VoxelError> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

impl SetMembership for VoxelSet {
    fn contains(&self, p: HPoint) -> bool {
        match self.grid.locate(p) {
            Some((i, j, k)) => self.get(i, j, k),
            None => false,
        }
    }
}

/// Voxelize a predicate over a box: occupied iff the predicate holds at the
/// cell center.
pub fn voxelize(
    pred: &dyn SetMembership,
    min: [f64; 3],
    max: [f64; 3],
    h: f64,
    hz: f64,
) -> Result<VoxelSet, VoxelError> {
    let grid = VoxelGrid::cover(min, max, h, hz)?;
    Ok(VoxelSet::from_predicate(grid, pred))
}
