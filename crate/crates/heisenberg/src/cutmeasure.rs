//! Cut measures: weighted families of voxel sets and the metrics they
//! induce.
//!
//! A map `f : B → ℝ^m` sampled on a voxel grid decomposes into a weighted
//! family of superlevel sets: for each coordinate and each threshold
//! `t_k` the atom `{f_i > t_k}` enters with weight `t_{k+1} − t_k`. The
//! induced distance `d(p,q) = Σ w·|1_E(p) − 1_E(q)|` telescopes back to
//! `‖f(p)−f(q)‖₁` up to the threshold resolution. The measure can then be
//! split by a per-atom perimeter threshold, with the high-perimeter part
//! obeying an exact Markov bound.

use crate::ball::HBall;
use crate::lines::LineSample;
use crate::perimeter::Census;
use crate::point::HPoint;
use crate::trace::TraceParams;
use crate::voxel::{VoxelError, VoxelGrid, VoxelSet};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CutMeasureError {
    #[error("thresholds for coordinate {coord} must be strictly increasing")]
    NonMonotoneThresholds { coord: usize },
    #[error("map has {expected} coordinates but {got} threshold lists were given")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("atom weights must be positive and finite, got {weight}")]
    BadWeight { weight: f64 },
    #[error("atom grids must agree with the measure grid")]
    GridMismatch,
    #[error("manifest does not match the stored atoms: {0}")]
    Manifest(String),
    #[error("voxel storage: {0}")]
    Voxel(#[from] VoxelError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// One atom of a cut measure: a voxel set with a positive weight.
#[derive(Debug, Clone)]
pub struct CutAtom {
    pub set: VoxelSet,
    pub weight: f64,
}

/// A finitely supported measure on subsets of a ball, stored as voxel
/// sets with positive weights.
#[derive(Debug, Clone, Default)]
pub struct CutMeasure {
    pub atoms: Vec<CutAtom>,
}

impl CutMeasure {
    pub fn new(atoms: Vec<CutAtom>) -> Result<Self, CutMeasureError> {
        for atom in &atoms {
            if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                return Err(CutMeasureError::BadWeight { weight: atom.weight });
            }
        }
        if let Some(first) = atoms.first() {
            if atoms.iter().any(|a| a.set.grid != first.set.grid) {
                return Err(CutMeasureError::GridMismatch);
            }
        }
        Ok(CutMeasure { atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// The induced semimetric `Σ w·|1_E(p) − 1_E(q)|`.
    pub fn d(&self, p: HPoint, q: HPoint) -> f64 {
        use crate::sets::SetMembership;
        self.atoms
            .iter()
            .filter(|a| a.set.contains(p) != a.set.contains(q))
            .map(|a| a.weight)
            .sum()
    }

    /// Persist as `manifest.json` plus one binary voxel file per atom.
    pub fn save(&self, dir: &Path) -> Result<(), CutMeasureError> {
        std::fs::create_dir_all(dir)?;
        let mut entries = Vec::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            let file = format!("atom_{i:04}.vox");
            atom.set.save(&dir.join(&file))?;
            entries.push(ManifestEntry { file, weight: atom.weight });
        }
        let manifest = Manifest { atoms: entries };
        std::fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, CutMeasureError> {
        let raw = std::fs::read(dir.join("manifest.json"))?;
        let manifest: Manifest = serde_json::from_slice(&raw)?;
        let mut atoms = Vec::with_capacity(manifest.atoms.len());
        for entry in &manifest.atoms {
            if entry.file.contains('/') || entry.file.contains("..") {
                return Err(CutMeasureError::Manifest(format!(
                    "atom file name {:?} escapes the measure directory",
                    entry.file
                )));
            }
            let set = VoxelSet::load(&dir.join(&entry.file))?;
            atoms.push(CutAtom { set, weight: entry.weight });
        }
        CutMeasure::new(atoms)
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestEntry {
    file: String,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    atoms: Vec<ManifestEntry>,
}

/// A vector-valued map sampled at voxel cell centers.
#[derive(Debug, Clone)]
pub struct SampledMap {
    pub grid: VoxelGrid,
    /// One value vector per coordinate, indexed by flat cell index.
    pub coords: Vec<Vec<f64>>,
}

impl SampledMap {
    /// Sample `f` at every cell center. `dim` is the output dimension.
    pub fn from_fn(grid: VoxelGrid, dim: usize, f: impl Fn(HPoint) -> Vec<f64>) -> Self {
        let mut coords = vec![Vec::with_capacity(grid.len()); dim];
        for center in grid.centers() {
            let v = f(center);
            assert_eq!(v.len(), dim, "map output dimension must be constant");
            for (c, val) in v.into_iter().enumerate() {
                coords[c].push(val);
            }
        }
        SampledMap { grid, coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Value at the cell containing `p` (nearest cell if `p` is outside).
    pub fn eval(&self, p: HPoint) -> Vec<f64> {
        let (i, j, k) = self.grid.locate_clamped(p);
        let idx = self.grid.flat_index(i, j, k);
        self.coords.iter().map(|c| c[idx]).collect()
    }

    /// `‖f(p) − f(q)‖₁` on the sampled values.
    pub fn l1_dist(&self, p: HPoint, q: HPoint) -> f64 {
        let (pi, pj, pk) = self.grid.locate_clamped(p);
        let (qi, qj, qk) = self.grid.locate_clamped(q);
        let a = self.grid.flat_index(pi, pj, pk);
        let b = self.grid.flat_index(qi, qj, qk);
        self.coords.iter().map(|c| (c[a] - c[b]).abs()).sum()
    }
}

/// Deterministically sample cell centers lying inside `ball`.
pub fn sample_ball_cells(
    grid: &VoxelGrid,
    ball: &HBall,
    count: usize,
    seed: u64,
) -> Vec<HPoint> {
    let inside: Vec<HPoint> = grid.centers().filter(|&p| ball.contains(p)).collect();
    if inside.is_empty() {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| inside[rng.gen_range(0..inside.len())]).collect()
}

/// Decompose a sampled map into its superlevel-set cut measure. For each
/// coordinate `i` and consecutive thresholds `t_k < t_{k+1}` the atom
/// `{f_i > t_k}` enters with weight `t_{k+1} − t_k`.
pub fn cut_measure_of_map(
    map: &SampledMap,
    thresholds: &[Vec<f64>],
) -> Result<CutMeasure, CutMeasureError> {
    if thresholds.len() != map.dim() {
        return Err(CutMeasureError::DimensionMismatch {
            expected: map.dim(),
            got: thresholds.len(),
        });
    }
    for (coord, list) in thresholds.iter().enumerate() {
        if list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CutMeasureError::NonMonotoneThresholds { coord });
        }
    }
    let grid = &map.grid;
    let mut atoms = Vec::new();
    for (coord, list) in thresholds.iter().enumerate() {
        let values = &map.coords[coord];
        for pair in list.windows(2) {
            let (t, weight) = (pair[0], pair[1] - pair[0]);
            let mut set = VoxelSet::empty(grid.clone());
            let mut idx = 0usize;
            for k in 0..grid.nz {
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        if values[idx] > t {
                            set.set(i, j, k, true);
                        }
                        idx += 1;
                    }
                }
            }
            atoms.push(CutAtom { set, weight });
        }
    }
    CutMeasure::new(atoms)
}

/// Total perimeter mass of the measure on `ball`: `Σ w·Per(E)(ball)`,
/// with each perimeter estimated by the kinematic endpoint count.
pub fn lambda_f(
    cm: &CutMeasure,
    ball: &HBall,
    sample: &LineSample,
    params: &TraceParams,
    gamma: f64,
) -> f64 {
    cm.atoms
        .iter()
        .map(|a| {
            let census = Census::collect(&a.set, ball, sample, 0.25, params, gamma);
            a.weight * census.perimeter()
        })
        .sum()
}

/// Result of splitting a measure at a perimeter threshold.
#[derive(Debug, Clone)]
pub struct SplitReport {
    /// Atoms with `Per(E)(ball) > θ·μ(ball)`.
    pub high: CutMeasure,
    /// The remaining atoms.
    pub low: CutMeasure,
    /// Per-atom kinematic perimeters, in input order.
    pub perimeters: Vec<f64>,
    pub theta: f64,
}

/// Split `cm` into the high-perimeter part (`Per > θ·μ(ball)`) and the
/// remainder. Because membership in the high part forces
/// `weight·Per/(θμ) > weight`, the high part's total weight never exceeds
/// `Σ w·Per / (θ·μ(ball))` — an exact Markov bound on the same estimates.
pub fn split_cut_measure(
    cm: &CutMeasure,
    theta: f64,
    ball: &HBall,
    sample: &LineSample,
    params: &TraceParams,
    gamma: f64,
) -> SplitReport {
    let mu = ball.volume();
    let mut high = Vec::new();
    let mut low = Vec::new();
    let mut perimeters = Vec::with_capacity(cm.atoms.len());
    for atom in &cm.atoms {
        let census = Census::collect(&atom.set, ball, sample, 0.25, params, gamma);
        let per = census.perimeter();
        perimeters.push(per);
        if per > theta * mu {
            high.push(atom.clone());
        } else {
            low.push(atom.clone());
        }
    }
    SplitReport {
        high: CutMeasure { atoms: high },
        low: CutMeasure { atoms: low },
        perimeters,
        theta,
    }
}
