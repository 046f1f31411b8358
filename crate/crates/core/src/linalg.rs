//! Dense symmetric linear algebra: packed symmetric matrices, a cyclic
//! Jacobi eigensolver, projection onto the PSD cone, and a small LU
//! factorization used to refine simplex bases.
//!
//! Everything here is written for the moderate sizes this workspace needs
//! (matrices up to a few hundred rows), favoring reproducibility and
//! numerical transparency over asymptotic tricks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from the dense solvers in this module.
#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    /// The Jacobi sweep cap was reached before the off-diagonal mass fell
    /// under the convergence threshold.
    #[error("eigensolver did not converge: off-diagonal norm {off_diag:.3e} after {sweeps} sweeps")]
    NonConvergence { off_diag: f64, sweeps: usize },
    /// LU factorization hit a pivot that is exactly or numerically zero.
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at step {step})")]
    Singular { pivot: f64, step: usize },
    /// A shape precondition was violated (mismatched or zero dimensions).
    #[error("bad shape: {0}")]
    BadShape(String),
}

/// Symmetric matrix with packed lower-triangle storage, so that
/// `get(i, j) == get(j, i)` holds exactly by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    /// Row-major lower triangle: entry (i, j) with i >= j lives at
    /// `i * (i + 1) / 2 + j`.
    data: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of side `n`.
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    /// Build from a callback on (row, col); only the lower triangle is read.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.data[i * (i + 1) / 2 + j] = f(i, j);
            }
        }
        m
    }

    /// Build from a dense row-major matrix, averaging the two triangles.
    /// Returns an error if the input is not square.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::BadShape(format!(
                "expected a square matrix, got {} rows with unequal lengths",
                n
            )));
        }
        Ok(SymMatrix::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * (i + 1) / 2 + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * (i + 1) / 2 + j] = v;
    }

    /// Expand to a dense row-major matrix.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "dimension mismatch");
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// Smallest eigenvalue (convenience over [`sym_eigen`]).
    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        let eig = sym_eigen(self)?;
        Ok(*eig.values.last().expect("n >= 1"))
    }
}

/// Eigendecomposition of a symmetric matrix: `values` sorted in descending
/// order, `vectors[k]` the unit eigenvector paired with `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Convergence threshold for the Jacobi sweep, relative to the input scale.
const JACOBI_TOL: f64 = 1e-14;
/// Sweep cap; cyclic Jacobi converges quadratically, so hitting this cap
/// signals pathological input (NaN/Inf) rather than slow convergence.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Rotations are applied in a fixed (row-cyclic) order, so the result is
/// deterministic. Converges when the total off-diagonal magnitude drops
/// below `1e-14` relative to the Frobenius norm.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = m.n;
    if n == 0 {
        return Err(LinalgError::BadShape("empty matrix".into()));
    }
    let mut a = m.to_dense();
    // v starts as the identity and accumulates the rotations; column k of v
    // ends up as the eigenvector for a[k][k].
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let scale = m.frobenius().max(1.0);

    let off_diag = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += a[i][j] * a[i][j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_diag(&a) > JACOBI_TOL * scale {
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NonConvergence { off_diag: off_diag(&a), sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= JACOBI_TOL * scale / (n * n) as f64 {
                    continue;
                }
                // Classic Jacobi rotation choosing the smaller angle.
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        if a.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonConvergence { off_diag: f64::INFINITY, sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&k| a[k][k]).collect();
    let vectors: Vec<Vec<f64>> =
        order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect();
    Ok(EigenDecomposition { values, vectors })
}

/// Nearest (Frobenius) positive-semidefinite matrix: eigendecompose, clamp
/// negative eigenvalues to zero, reconstruct.
pub fn psd_project(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let eig = sym_eigen(m)?;
    let n = m.n;
    let mut out = SymMatrix::zeros(n);
    for (lam, vec) in eig.values.iter().zip(eig.vectors.iter()) {
        let lam = lam.max(0.0);
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..=i {
                let idx = i * (i + 1) / 2 + j;
                out.data[idx] += lam * vec[i] * vec[j];
            }
        }
    }
    Ok(out)
}

/// Dense LU factorization with partial pivoting.
pub struct Lu {
    n: usize,
    a: Vec<f64>, // row-major, L below the diagonal (unit), U on and above
    piv: Vec<usize>,
}

impl Lu {
    /// Factor a dense row-major square matrix.
    pub fn factor(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::BadShape("LU needs a nonempty square matrix".into()));
        }
        let mut a: Vec<f64> = rows.iter().flatten().copied().collect();
        let mut piv = Vec::with_capacity(n);
        for k in 0..n {
            let (mut best, mut best_abs) = (k, a[k * n + k].abs());
            for r in (k + 1)..n {
                let v = a[r * n + k].abs();
                if v > best_abs {
                    best = r;
                    best_abs = v;
                }
            }
            if best_abs < 1e-300 {
                return Err(LinalgError::Singular { pivot: best_abs, step: k });
            }
            if best != k {
                for c in 0..n {
                    a.swap(k * n + c, best * n + c);
                }
            }
            piv.push(best);
            let pivot = a[k * n + k];
            for r in (k + 1)..n {
                let f = a[r * n + k] / pivot;
                a[r * n + k] = f;
                for c in (k + 1)..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Ok(Lu { n, a, piv })
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "dimension mismatch");
        let mut x = b.to_vec();
        // Rows were swapped in full during factorization, so P A = L U with
        // P applied as the recorded transpositions in order; permute first,
        // then run clean triangular solves.
        for k in 0..n {
            x.swap(k, self.piv[k]);
        }
        for k in 0..n {
            for r in (k + 1)..n {
                x[r] -= self.a[r * n + k] * x[k];
            }
        }
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                x[k] -= self.a[k * n + c] * x[c];
            }
            x[k] /= self.a[k * n + k];
        }
        x
    }

    /// Solve `A' y = c` (transpose system), used for dual recovery.
    pub fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(c.len(), n, "dimension mismatch");
        // A = P^{-1} L U  =>  A' y = c  <=>  U' L' P y = c.
        let mut y = c.to_vec();
        // Forward solve U' w = c (U' is lower triangular).
        for k in 0..n {
            for r in 0..k {
                y[k] -= self.a[r * n + k] * y[r];
            }
            y[k] /= self.a[k * n + k];
        }
        // Back solve L' v = w (L' is unit upper triangular).
        for k in (0..n).rev() {
            for r in (k + 1)..n {
                y[k] -= self.a[r * n + k] * y[r];
            }
        }
        // Undo the row permutation: y := P' y.
        for k in (0..n).rev() {
            y.swap(k, self.piv[k]);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ~ {b} (tol {tol})");
    }

    #[test]
    fn packed_storage_is_exactly_symmetric() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 2, 1.25);
        assert_eq!(m.get(2, 0), 1.25);
        assert_eq!(m.get(0, 2).to_bits(), m.get(2, 0).to_bits());
    }

    #[test]
    fn eigen_two_by_two_fixtures() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let m = SymMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert_close(e.values[0], 3.0, 1e-12);
        assert_close(e.values[1], 1.0, 1e-12);

        // [[0,1],[1,0]] has eigenvalues 1 and -1.
        let m = SymMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert_close(e.values[0], 1.0, 1e-12);
        assert_close(e.values[1], -1.0, 1e-12);
    }

    #[test]
    fn eigen_residuals_are_small() {
        // Deterministic "random-ish" symmetric matrix.
        let n = 12;
        let m = SymMatrix::from_fn(n, |i, j| ((i * 31 + j * 17) % 13) as f64 / 13.0 - 0.4);
        let e = sym_eigen(&m).unwrap();
        for (lam, v) in e.values.iter().zip(e.vectors.iter()) {
            let mv = m.mul_vec(v);
            let resid: f64 = mv
                .iter()
                .zip(v.iter())
                .map(|(a, b)| (a - lam * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-10 * m.frobenius().max(1.0), "residual {resid}");
        }
        // Eigenvalue sum equals the trace.
        let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
        assert_close(e.values.iter().sum::<f64>(), trace, 1e-10);
    }

    #[test]
    fn psd_project_fixture_and_idempotence() {
        // Projection of [[0,1],[1,0]] is [[1/2,1/2],[1/2,1/2]].
        let m = SymMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let p = psd_project(&m).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(p.get(i, j), 0.5, 1e-12);
            }
        }
        // Idempotent: projecting again changes nothing.
        let p2 = psd_project(&p).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_close(p2.get(i, j), p.get(i, j), 1e-12);
            }
        }
        // PSD input passes through unchanged.
        let id = SymMatrix::from_fn(4, |i, j| if i == j { 2.0 } else { 0.0 });
        let pid = psd_project(&id).unwrap();
        for i in 0..4 {
            assert_close(pid.get(i, i), 2.0, 1e-12);
        }
    }

    #[test]
    fn psd_project_output_is_psd() {
        let n = 9;
        let m = SymMatrix::from_fn(n, |i, j| ((i * 7 + j * 5) % 11) as f64 / 11.0 - 0.45);
        let p = psd_project(&m).unwrap();
        let min = p.min_eigenvalue().unwrap();
        assert!(min >= -1e-10, "projection not PSD: min eig {min}");
    }

    #[test]
    fn lu_solves_forward_and_transpose() {
        let a = vec![
            vec![4.0, -2.0, 1.0],
            vec![3.0, 6.0, -4.0],
            vec![2.0, 1.0, 8.0],
        ];
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[12.0, -25.0, 32.0]);
        // Verify A x = b.
        for (i, row) in a.iter().enumerate() {
            let got: f64 = row.iter().zip(&x).map(|(c, xi)| c * xi).sum();
            assert_close(got, [12.0, -25.0, 32.0][i], 1e-10);
        }
        let y = lu.solve_transpose(&[1.0, 2.0, 3.0]);
        for j in 0..3 {
            let got: f64 = (0..3).map(|i| a[i][j] * y[i]).sum();
            assert_close(got, [1.0, 2.0, 3.0][j], 1e-10);
        }
    }

    #[test]
    fn lu_handles_row_swaps() {
        // This matrix forces a row swap at every elimination step with
        // unequal multipliers, so it catches any mix-up between the
        // permutation and the stored L factors.
        let a = vec![
            vec![-0.04, 1.0, 0.25],
            vec![-0.02, 0.0, 0.5],
            vec![1.0, 0.0, 0.0],
        ];
        let lu = Lu::factor(&a).unwrap();
        let x = lu.solve(&[0.0, 0.0, 1.0]);
        assert_close(x[0], 1.0, 1e-12);
        assert_close(x[1], 0.03, 1e-12);
        assert_close(x[2], 0.04, 1e-12);
        let y = lu.solve_transpose(&[0.5, -1.0, 2.0]);
        for j in 0..3 {
            let got: f64 = (0..3).map(|i| a[i][j] * y[i]).sum();
            assert_close(got, [0.5, -1.0, 2.0][j], 1e-12);
        }
    }

    #[test]
    fn lu_reports_singular_input() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        match Lu::factor(&a) {
            Err(LinalgError::Singular { .. }) => {}
            Err(other) => panic!("expected Singular, got {other:?}"),
            Ok(_) => panic!("expected Singular, got a factorization"),
        }
    }
}
