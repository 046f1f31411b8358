//! The negative-type (squared-L2) relaxation of sparsest cut, solved by
//! operator splitting.
//!
//! For a demand instance `(C, D)` the relaxation value is
//!
//! ```text
//! M*(C, D) = min { sum C.d : d negative-type semimetric, sum D.d = 1 }
//! ```
//!
//! with sums over ordered pairs. Negative type is encoded exactly through
//! the Schoenberg correspondence: `d` together with a PSD Gram matrix `Q`
//! over the non-base points, linked by `d(0,i) = Q[i][i]` and
//! `d(i,j) = Q[i][i] + Q[j][j] - 2 Q[i][j]`, plus all triangle inequalities
//! on `d`. Every cut semimetric is feasible after scaling, so
//! `M* <= Φ*` always; on four points the relaxation is tight.
//!
//! The solver is a self-contained ADMM in the form `min c.x` subject to
//! `Ax + s = b`, `s` in a product cone (zero x nonneg x PSD): a cached
//! factorization of `A'A` (which is independent of the penalty, so penalty
//! rescaling is free), over-relaxed iterates, and a Jacobi-eigenvalue PSD
//! projection. No external solver is involved.

use crate::linalg::{psd_project, sym_eigen, LinalgError, Lu, SymMatrix};
use crate::metric::{check_metric, FiniteMetric};
use crate::sparsestcut::{phi_star, DemandInstance, SparsestCutError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cone-dimension cap for the solver.
pub const MAX_SDP_POINTS: usize = 16;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("too many points for the conic solver: {n} (cap {MAX_SDP_POINTS})")]
    TooLarge { n: usize },
    #[error("solver did not converge: primal {primal:.3e}, dual {dual:.3e} after {iterations} iterations")]
    Convergence { primal: f64, dual: f64, iterations: usize, history: Vec<ResidualSample> },
    #[error("structural error: {0}")]
    Structure(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    SparsestCut(#[from] SparsestCutError),
    #[error("metric is not of negative type (min Gram eigenvalue {min_eig:.3e})")]
    NotNegativeType { min_eig: f64 },
    #[error("certificate chain failed: {0}")]
    Chain(String),
}

/// Solver options; defaults match the residual-based stopping used by the
/// acceptance experiments.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Stop when both scaled residuals drop below this.
    pub stop_tol: f64,
    pub max_iter: usize,
    /// Over-relaxation factor in (1, 2).
    pub over_relax: f64,
    /// Initial penalty.
    pub rho0: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { stop_tol: 1e-7, max_iter: 50_000, over_relax: 1.6, rho0: 1.0 }
    }
}

/// One residual checkpoint from the iteration history.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualSample {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
}

/// Final solver diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SdpResiduals {
    /// Scaled equality-system residual `|Ax + s - b| / (1 + |b|)`.
    pub primal: f64,
    /// Scaled dual residual.
    pub dual: f64,
    /// PSD defect of the returned Gram: `max(0, -min eigenvalue)`.
    pub cone: f64,
    /// Worst violation of `d(i,j) = Q[i][i] + Q[j][j] - 2 Q[i][j]`.
    pub link: f64,
    /// Worst triangle violation of the returned distances.
    pub triangle: f64,
    pub iterations: usize,
}

/// Solution of the relaxation, rescaled so the demand normalization holds
/// exactly.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub objective: f64,
    /// The optimizing semimetric.
    pub d: FiniteMetric,
    /// Full n x n Gram of the squared-L2 representation (base point row and
    /// column are zero).
    pub q: Vec<Vec<f64>>,
    pub residuals: SdpResiduals,
}

impl SdpSolution {
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            objective: f64,
            d: Vec<Vec<f64>>,
            q: &'a Vec<Vec<f64>>,
            residuals: &'a SdpResiduals,
        }
        let n = self.d.n();
        let d: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| self.d.dist(i, j)).collect()).collect();
        serde_json::to_string_pretty(&Out {
            objective: self.objective,
            d,
            q: &self.q,
            residuals: &self.residuals,
        })
        .expect("serializable")
    }
}

/// Sparse CSR matrix, just big enough for the solver's needs.
struct Csr {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn from_rows(cols: usize, rows: &[Vec<(usize, f64)>]) -> Csr {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut vals = Vec::new();
        indptr.push(0);
        for row in rows {
            for &(c, v) in row {
                indices.push(c);
                vals.push(v);
            }
            indptr.push(indices.len());
        }
        Csr { rows: rows.len(), cols, indptr, indices, vals }
    }

    fn mul(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.rows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.vals[k] * x[self.indices[k]];
            }
            out[r] = acc;
        }
    }

    fn mul_t(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for r in 0..self.rows {
            let yr = y[r];
            if yr != 0.0 {
                for k in self.indptr[r]..self.indptr[r + 1] {
                    out[self.indices[k]] += self.vals[k] * yr;
                }
            }
        }
    }

    /// Dense normal matrix `A'A`.
    fn normal_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.cols]; self.cols];
        for r in 0..self.rows {
            for k1 in self.indptr[r]..self.indptr[r + 1] {
                for k2 in self.indptr[r]..self.indptr[r + 1] {
                    m[self.indices[k1]][self.indices[k2]] += self.vals[k1] * self.vals[k2];
                }
            }
        }
        m
    }
}

/// Problem geometry shared by assembly, projection, and extraction.
struct Layout {
    n: usize,
    n_eq: usize,
    n_ineq: usize,
    psd_side: usize,
}

impl Layout {
    fn pair_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // Row-major upper-triangle enumeration of pairs.
        let n = self.n;
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn svec_len(&self) -> usize {
        self.psd_side * (self.psd_side + 1) / 2
    }

    fn svec_index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let m = self.psd_side;
        a * m - (a * a - a) / 2 + (b - a)
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Project the PSD block of `w` (symmetric-vectorized, off-diagonals scaled
/// by sqrt(2)) onto the PSD cone in place.
fn project_psd_block(w: &mut [f64], side: usize) -> Result<(), LinalgError> {
    let mut m = SymMatrix::zeros(side);
    let mut k = 0;
    for a in 0..side {
        for b in a..side {
            let v = if a == b { w[k] } else { w[k] / SQRT2 };
            m.set(a, b, v);
            k += 1;
        }
    }
    let p = psd_project(&m)?;
    let mut k = 0;
    for a in 0..side {
        for b in a..side {
            w[k] = if a == b { p.get(a, b) } else { p.get(a, b) * SQRT2 };
            k += 1;
        }
    }
    Ok(())
}

fn project_cone(w: &mut [f64], lay: &Layout) -> Result<(), LinalgError> {
    for v in &mut w[..lay.n_eq] {
        *v = 0.0;
    }
    for v in &mut w[lay.n_eq..lay.n_eq + lay.n_ineq] {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    project_psd_block(&mut w[lay.n_eq + lay.n_ineq..], lay.psd_side)
}

/// Solve the relaxation. See module docs for the formulation; the returned
/// solution is rescaled so `sum D.d = 1` holds exactly, and carries the
/// final residuals.
pub fn solve_gl_sdp(inst: &DemandInstance, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let n = inst.n();
    if n > MAX_SDP_POINTS {
        return Err(SdpError::TooLarge { n });
    }
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let np = pairs.len();
    let lay = Layout { n, n_eq: 0, n_ineq: 0, psd_side: n - 1 };
    let g = lay.svec_len();
    let nx = np + g;

    // --- Assembly: equalities, then inequalities, then the PSD block. ---
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    // Link rows: d and Q describe the same squared-L2 geometry.
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let mut row = vec![(p, 1.0)];
        if i == 0 {
            row.push((np + lay.svec_index(j - 1, j - 1), -1.0));
        } else {
            row.push((np + lay.svec_index(i - 1, i - 1), -1.0));
            row.push((np + lay.svec_index(j - 1, j - 1), -1.0));
            // Off-diagonal svec entries carry a sqrt(2) factor, so the
            // coefficient of +2 Q[i][j] becomes sqrt(2).
            row.push((np + lay.svec_index(i - 1, j - 1), SQRT2));
        }
        rows.push(row);
        b.push(0.0);
    }
    // Normalization row: sum over ordered pairs D.d = 1.
    let norm_row: Vec<(usize, f64)> = pairs
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| inst.demand(i, j) > 0.0)
        .map(|(p, &(i, j))| (p, 2.0 * inst.demand(i, j)))
        .collect();
    if norm_row.is_empty() {
        return Err(SdpError::Structure("demand matrix is identically zero".into()));
    }
    rows.push(norm_row);
    b.push(1.0);
    let n_eq = rows.len();
    // Nonnegativity of each distance.
    for p in 0..np {
        rows.push(vec![(p, -1.0)]);
        b.push(0.0);
    }
    // Triangle rows: d(i,j) <= d(i,k) + d(k,j).
    for &(i, j) in &pairs {
        for k in 0..n {
            if k == i || k == j {
                continue;
            }
            rows.push(vec![
                (lay.pair_index(i, j), 1.0),
                (lay.pair_index(i, k), -1.0),
                (lay.pair_index(k, j), -1.0),
            ]);
            b.push(0.0);
        }
    }
    let n_ineq = rows.len() - n_eq;
    // PSD block: s = q, one row per svec coordinate, kept unit-scaled so the
    // cone geometry is untouched by equilibration.
    for t in 0..g {
        rows.push(vec![(np + t, -1.0)]);
        b.push(0.0);
    }
    let lay = Layout { n_eq, n_ineq, ..lay };
    let m_rows = rows.len();

    // Row equilibration (common unit factor on the PSD block, which is
    // already unit-norm row by row).
    for (r, row) in rows.iter_mut().enumerate().take(n_eq + n_ineq) {
        let norm: f64 = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in row.iter_mut() {
                *v /= norm;
            }
            b[r] /= norm;
        }
    }

    let a = Csr::from_rows(nx, &rows);
    let mut ata = a.normal_matrix();
    // Tiny Tikhonov term keeps the factorization comfortably definite.
    for (i, row) in ata.iter_mut().enumerate() {
        row[i] += 1e-10;
    }
    let lu = Lu::factor(&ata)?;

    // Objective: sum over ordered pairs C.d = 2 sum_{i<j} C_ij d_ij.
    let mut c = vec![0.0; nx];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        c[p] = 2.0 * inst.capacity(i, j);
    }

    // --- ADMM loop ---
    let alpha = opts.over_relax;
    let mut rho = opts.rho0;
    let mut x = vec![0.0; nx];
    let mut z = b.clone();
    project_cone(&mut z, &lay)?;
    let mut u = vec![0.0; m_rows];
    let mut z_prev = z.clone();
    let mut ax = vec![0.0; m_rows];
    let mut rhs = vec![0.0; nx];
    let mut scratch_m = vec![0.0; m_rows];
    let mut scratch_n = vec![0.0; nx];

    let b_norm = 1.0 + b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = 1.0 + c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut history: Vec<ResidualSample> = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        // x-update: (A'A) x = A'(b - z - u) - c/rho.
        for r in 0..m_rows {
            scratch_m[r] = b[r] - z[r] - u[r];
        }
        a.mul_t(&scratch_m, &mut rhs);
        for t in 0..nx {
            rhs[t] -= c[t] / rho;
        }
        let xs = lu.solve(&rhs);
        x.copy_from_slice(&xs);
        a.mul(&x, &mut ax);
        // Over-relaxation mixes the new Ax with the previous residual split.
        z_prev.copy_from_slice(&z);
        for r in 0..m_rows {
            let ax_hat = alpha * ax[r] + (1.0 - alpha) * (b[r] - z[r]);
            scratch_m[r] = ax_hat;
            z[r] = b[r] - ax_hat - u[r];
        }
        project_cone(&mut z, &lay)?;
        for r in 0..m_rows {
            u[r] += scratch_m[r] + z[r] - b[r];
        }

        if iterations % 25 == 0 || iterations == opts.max_iter {
            // Primal residual on the true (non-relaxed) iterate.
            let mut pr = 0.0f64;
            for r in 0..m_rows {
                pr += (ax[r] + z[r] - b[r]).powi(2);
            }
            primal = pr.sqrt() / b_norm;
            for r in 0..m_rows {
                scratch_m[r] = z[r] - z_prev[r];
            }
            a.mul_t(&scratch_m, &mut scratch_n);
            dual = rho * scratch_n.iter().map(|v| v * v).sum::<f64>().sqrt() / c_norm;
            history.push(ResidualSample { iteration: iterations, primal, dual });
            if history.len() > 400 {
                history.drain(..200);
            }
            if primal < opts.stop_tol && dual < opts.stop_tol {
                converged = true;
                break;
            }
            // Penalty rebalancing is free: A'A does not depend on rho, and
            // the scaled dual just rescales inversely.
            if primal > 10.0 * dual && rho < 1e6 {
                rho *= 2.0;
                for v in &mut u {
                    *v *= 0.5;
                }
            } else if dual > 10.0 * primal && rho > 1e-6 {
                rho *= 0.5;
                for v in &mut u {
                    *v *= 2.0;
                }
            }
        }
    }

    if !converged {
        return Err(SdpError::Convergence { primal, dual, iterations, history });
    }

    // --- Extraction: exact renormalization, then diagnostics. ---
    let mut denom = 0.0;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        denom += 2.0 * inst.demand(i, j) * x[p];
    }
    if !(denom > 0.0) {
        return Err(SdpError::Convergence { primal, dual, iterations, history });
    }
    let scale = 1.0 / denom;
    let dvals: Vec<f64> = (0..np).map(|p| x[p] * scale).collect();
    let mut q = vec![vec![0.0; n]; n];
    for a_ in 0..(n - 1) {
        for b_ in a_..(n - 1) {
            let raw = x[np + lay.svec_index(a_, b_)];
            let v = if a_ == b_ { raw } else { raw / SQRT2 } * scale;
            q[a_ + 1][b_ + 1] = v;
            q[b_ + 1][a_ + 1] = v;
        }
    }

    let mut link = 0.0f64;
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let expect = q[i][i] + q[j][j] - 2.0 * q[i][j];
        link = link.max((dvals[p] - expect).abs());
    }
    let gram = SymMatrix::from_fn(n - 1, |a_, b_| q[a_ + 1][b_ + 1]);
    let min_eig = sym_eigen(&gram)?.values.last().copied().unwrap_or(0.0);
    let cone = (-min_eig).max(0.0);

    let mut dmat = vec![vec![0.0; n]; n];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        // Shed the tiny negative dust an ADMM iterate can carry.
        let v = dvals[p].max(0.0);
        dmat[i][j] = v;
        dmat[j][i] = v;
    }
    let d = FiniteMetric::from_matrix(&dmat)
        .map_err(|e| SdpError::Structure(format!("solution distances unusable: {e}")))?;
    let triangle =
        check_metric(&d).into_iter().map(|v| v.slack).fold(0.0, f64::max);

    let objective: f64 = pairs
        .iter()
        .enumerate()
        .map(|(p, &(i, j))| 2.0 * inst.capacity(i, j) * dvals[p].max(0.0))
        .sum();

    Ok(SdpSolution {
        objective,
        d,
        q,
        residuals: SdpResiduals { primal, dual, cone, link, triangle, iterations },
    })
}

/// Integrality-gap report: the exact cut optimum against the relaxation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub phi_star: f64,
    pub argmin_cut: u32,
    pub m_star: f64,
    /// `phi_star / m_star`, at least `1 - 1e-4` by weak duality.
    pub gap: f64,
    pub residuals: SdpResiduals,
    /// Objective of a feasibility witness (a known feasible point whose
    /// value upper-bounds `m_star`), when the caller supplied one.
    pub witness_objective: Option<f64>,
    /// Exact L1 distortion of the source metric, for reports built by
    /// [`gap_lower_bound_from_metric`].
    pub c1: Option<f64>,
}

impl GapReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Exact sparsest cut vs. the relaxation on the same instance.
pub fn integrality_gap(inst: &DemandInstance, opts: &SdpOptions) -> Result<GapReport, SdpError> {
    let cut = phi_star(inst)?;
    let sdp = solve_gl_sdp(inst, opts)?;
    if sdp.objective <= 0.0 {
        return Err(SdpError::Chain(format!(
            "relaxation value {} is not positive; gap undefined",
            sdp.objective
        )));
    }
    let gap = cut.value / sdp.objective;
    if gap < 1.0 - 1e-4 {
        return Err(SdpError::Chain(format!(
            "relaxation exceeded the cut optimum: phi* = {}, M* = {}",
            cut.value, sdp.objective
        )));
    }
    Ok(GapReport {
        n: inst.n(),
        phi_star: cut.value,
        argmin_cut: cut.mask,
        m_star: sdp.objective,
        gap,
        residuals: sdp.residuals,
        witness_objective: None,
        c1: None,
    })
}

/// Lower-bound the integrality gap from a negative-type metric.
///
/// The chain: verify negative type, compute the exact distortion certificate
/// and its dual demand pair `(C_d, D_d)`, for which every cut has ratio 1 or
/// more while `d` itself is feasible for the relaxation with value `1/c1`.
/// Therefore `Φ*(C_d, D_d) = 1` and `M*(C_d, D_d) <= 1/c1`, giving a gap of
/// at least `c1(d)` on this instance.
pub fn gap_lower_bound_from_metric(
    d: &FiniteMetric,
    opts: &SdpOptions,
) -> Result<GapReport, SdpError> {
    let (ok, min_eig) = crate::metric::is_negative_type(d, None)
        .map_err(|e| SdpError::Structure(e.to_string()))?;
    if !ok {
        return Err(SdpError::NotNegativeType { min_eig });
    }
    let (demands, cert) = crate::cutcone::dual_demands(d)
        .map_err(|e| SdpError::Chain(format!("dual extraction failed: {e}")))?;
    let inst = DemandInstance::from_matrices(&demands.c, &demands.d)?;
    let cut = phi_star(&inst)?;
    if (cut.value - 1.0).abs() > 1e-6 {
        return Err(SdpError::Chain(format!(
            "dual demands should have sparsest cut exactly 1, got {}",
            cut.value
        )));
    }
    let sdp = solve_gl_sdp(&inst, opts)?;
    // The input metric, normalized, witnesses feasibility at value 1/c1.
    let (num, den) = inst.weigh_metric(d);
    let witness = num / den;
    if sdp.objective > witness + 1e-4 {
        return Err(SdpError::Chain(format!(
            "relaxation value {} exceeds its feasibility witness {}",
            sdp.objective, witness
        )));
    }
    let gap = cut.value / sdp.objective;
    Ok(GapReport {
        n: d.n(),
        phi_star: cut.value,
        argmin_cut: cut.mask,
        m_star: sdp.objective,
        gap,
        residuals: sdp.residuals,
        witness_objective: Some(witness),
        c1: Some(cert.c1),
    })
}
