//! Finite metric spaces: validation, negative-type (Schoenberg) checks, and
//! JSON/CSV interchange.
//!
//! A metric `d` on `n` points is of *negative type* exactly when `sqrt(d)`
//! embeds isometrically into Hilbert space, which by the classical Schoenberg
//! criterion is equivalent to positive semidefiniteness of the base-point
//! Gram matrix `G[i][j] = (d(base,i) + d(base,j) - d(i,j)) / 2`.

use crate::linalg::{sym_eigen, LinalgError, SymMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on point counts; everything downstream (cut enumeration, LP
/// sizes, SDP cone dimensions) is sized for small spaces.
pub const MAX_POINTS: usize = 64;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("structural error: {0}")]
    Structure(String),
    #[error("too many points: {n} (cap {MAX_POINTS})")]
    TooLarge { n: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A finite semimetric: symmetric, zero diagonal, nonnegative finite entries.
///
/// Strict positivity off the diagonal and the triangle inequality are *not*
/// constructor invariants — relaxation solvers legitimately produce
/// degenerate distances — and are checked by [`check_metric`] or by the
/// preconditions of the operations that need them.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    n: usize,
    d: Vec<f64>, // row-major n x n, symmetry enforced at construction
}

/// One triangle-inequality violation: `d(i,k) > d(i,j) + d(j,k)` by `slack`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub slack: f64,
}

#[derive(Serialize, Deserialize)]
struct MetricJson {
    n: usize,
    d: Vec<Vec<f64>>,
}

impl FiniteMetric {
    /// Build from a dense matrix. Errors if the input is not square, not
    /// symmetric (to 1e-12 relative), has a nonzero diagonal, is larger than
    /// [`MAX_POINTS`], or contains negative/non-finite entries. The stored
    /// matrix is exactly symmetrized.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self, MetricError> {
        let n = rows.len();
        if n < 2 {
            return Err(MetricError::Structure(format!("need at least 2 points, got {n}")));
        }
        if n > MAX_POINTS {
            return Err(MetricError::TooLarge { n });
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(MetricError::Structure("matrix is not square".into()));
        }
        let mut scale: f64 = 0.0;
        for r in rows {
            for &v in r {
                if !v.is_finite() {
                    return Err(MetricError::Structure("non-finite entry".into()));
                }
                scale = scale.max(v.abs());
            }
        }
        let tol = 1e-12 * scale.max(1.0);
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            if rows[i][i].abs() > tol {
                return Err(MetricError::Structure(format!(
                    "nonzero diagonal entry d[{i}][{i}] = {}",
                    rows[i][i]
                )));
            }
            for j in 0..n {
                if (rows[i][j] - rows[j][i]).abs() > tol {
                    return Err(MetricError::Structure(format!(
                        "asymmetric entries d[{i}][{j}] = {} vs d[{j}][{i}] = {}",
                        rows[i][j], rows[j][i]
                    )));
                }
                if rows[i][j] < -tol {
                    return Err(MetricError::Structure(format!(
                        "negative entry d[{i}][{j}] = {}",
                        rows[i][j]
                    )));
                }
                if i != j {
                    d[i * n + j] = 0.5 * (rows[i][j] + rows[j][i]).max(0.0);
                }
            }
        }
        Ok(FiniteMetric { n, d })
    }

    /// Build from a distance callback (evaluated once per unordered pair).
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, MetricError> {
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        FiniteMetric::from_matrix(&rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Largest distance (0 for the degenerate all-zero semimetric).
    pub fn max_dist(&self) -> f64 {
        self.d.iter().cloned().fold(0.0, f64::max)
    }

    /// True if every off-diagonal distance is strictly positive.
    pub fn is_positive(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.dist(i, j) > 0.0))
    }

    /// Restriction to a subset of point indices (in the given order).
    pub fn restrict(&self, idx: &[usize]) -> Result<FiniteMetric, MetricError> {
        for &i in idx {
            if i >= self.n {
                return Err(MetricError::Structure(format!("index {i} out of range")));
            }
        }
        FiniteMetric::from_fn(idx.len(), |a, b| self.dist(idx[a], idx[b]))
    }

    /// Uniformly rescaled copy (`s > 0`).
    pub fn scale(&self, s: f64) -> Result<FiniteMetric, MetricError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(MetricError::Structure(format!("scale must be positive, got {s}")));
        }
        Ok(FiniteMetric { n: self.n, d: self.d.iter().map(|v| v * s).collect() })
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<f64>> =
            (0..self.n).map(|i| (0..self.n).map(|j| self.dist(i, j)).collect()).collect();
        serde_json::to_string_pretty(&MetricJson { n: self.n, d: rows }).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, MetricError> {
        let raw: MetricJson =
            serde_json::from_str(s).map_err(|e| MetricError::Parse(e.to_string()))?;
        if raw.d.len() != raw.n {
            return Err(MetricError::Parse(format!(
                "declared n = {} but matrix has {} rows",
                raw.n,
                raw.d.len()
            )));
        }
        FiniteMetric::from_matrix(&raw.d)
    }

    /// CSV form: a header row `d0,...,d{n-1}` followed by the n matrix rows.
    /// f64 values print in shortest-roundtrip form, so a read-back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.n).map(|j| format!("d{j}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{}", self.dist(i, j))).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(s: &str) -> Result<Self, MetricError> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MetricError::Parse("empty CSV".into()))?;
        let n = header.split(',').count();
        let mut rows = Vec::with_capacity(n);
        for line in lines {
            let row: Result<Vec<f64>, _> =
                line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| MetricError::Parse(format!("bad float: {e}")))?);
        }
        if rows.len() != n {
            return Err(MetricError::Parse(format!(
                "header declares {n} columns but found {} data rows",
                rows.len()
            )));
        }
        FiniteMetric::from_matrix(&rows)
    }
}

/// Scan all ordered triples for triangle violations
/// `d(i,k) > d(i,j) + d(j,k) + tol` with `tol = 1e-12 * max entry`, returning
/// each violating (unordered-pair, middle-point) combination once.
pub fn check_metric(m: &FiniteMetric) -> Vec<TriangleViolation> {
    let n = m.n();
    let tol = 1e-12 * m.max_dist().max(1.0);
    let mut out = Vec::new();
    for i in 0..n {
        for k in (i + 1)..n {
            for j in 0..n {
                if j == i || j == k {
                    continue;
                }
                let slack = m.dist(i, k) - m.dist(i, j) - m.dist(j, k);
                if slack > tol {
                    out.push(TriangleViolation { i, j, k, slack });
                }
            }
        }
    }
    out
}

/// Schoenberg Gram matrix of `sqrt(d)` anchored at `base`: the
/// `(n-1) x (n-1)` matrix over the non-base points with
/// `G[a][b] = (d(base, p_a) + d(base, p_b) - d(p_a, p_b)) / 2`.
pub fn gram_from_sqrt_metric(m: &FiniteMetric, base: usize) -> Result<SymMatrix, MetricError> {
    let n = m.n();
    if base >= n {
        return Err(MetricError::Structure(format!("base index {base} out of range for n = {n}")));
    }
    let others: Vec<usize> = (0..n).filter(|&i| i != base).collect();
    Ok(SymMatrix::from_fn(n - 1, |a, b| {
        0.5 * (m.dist(base, others[a]) + m.dist(base, others[b]) - m.dist(others[a], others[b]))
    }))
}

/// Schoenberg negative-type test: `d` is of negative type iff the base-point
/// Gram matrix is PSD. Returns `(verdict, min_eigenvalue)`; the verdict is
/// `min_eigenvalue >= -tol`, with `tol` defaulting to
/// `1e-9 * max |Gram entry|` when `None` is passed.
pub fn is_negative_type(
    m: &FiniteMetric,
    tol: Option<f64>,
) -> Result<(bool, f64), MetricError> {
    let gram = gram_from_sqrt_metric(m, 0)?;
    let scale = (0..gram.n())
        .flat_map(|i| (0..gram.n()).map(move |j| (i, j)))
        .map(|(i, j)| gram.get(i, j).abs())
        .fold(0.0f64, f64::max);
    let tol = tol.unwrap_or(1e-9 * scale.max(1.0));
    let min = sym_eigen(&gram)?.values.last().copied().expect("n >= 2");
    Ok((min >= -tol, min))
}
