//! Exact L1 distortion through the cut cone.
//!
//! A finite metric embeds in L1 with distortion `c` iff some nonnegative
//! combination of cut semimetrics sandwiches it: `d <= sum λ_S d_S <= c d`.
//! Minimizing `c` over the canonical cuts (subsets containing point 0) is a
//! linear program; its optimum is the exact L1 distortion `c1(d)`, and the
//! LP dual multipliers assemble into a demand pair `(C_d, D_d)` certifying
//! that no L1-embeddable metric can do better: every cut has ratio >= 1
//! while `d` itself achieves `1/c1`.

use crate::lp::{lp_solve, LinearProgram, LpError, Rel};
use crate::metric::{check_metric, FiniteMetric, TriangleViolation};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cap for materialized cut enumeration (`2^{n-1} - 1` masks).
pub const MAX_ENUM_POINTS: usize = 24;
/// Cap for the distortion LP (`2^{n-1} - 1` columns).
pub const MAX_LP_POINTS: usize = 14;

#[derive(Debug, Error)]
pub enum CutConeError {
    #[error("too many points for cut enumeration: {n} (cap {cap})")]
    TooLarge { n: usize, cap: usize },
    #[error("input is not a metric: {violations} triangle violations (worst slack {worst:.3e}) and/or non-positive distances")]
    NonMetric { violations: usize, worst: f64 },
    #[error("LP failed: {0}")]
    Lp(#[from] LpError),
    #[error("certificate validation failed: {what} residual {residual:.3e} exceeds {tol:.1e}")]
    CertificateInvalid { what: &'static str, residual: f64, tol: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

/// All canonical cut masks for `n` points: proper nonempty subsets that
/// contain point 0 (bit 0 set), exactly `2^{n-1} - 1` of them. Restricting
/// to canonical cuts loses nothing since `S` and its complement induce the
/// same semimetric.
pub fn enumerate_cuts(n: usize) -> Result<Vec<u32>, CutConeError> {
    if !(2..=MAX_ENUM_POINTS).contains(&n) {
        return Err(CutConeError::TooLarge { n, cap: MAX_ENUM_POINTS });
    }
    let full = (1u32 << n) - 1;
    Ok((0..(1u32 << (n - 1)) - 1).map(|k| (k << 1) | 1).filter(|&m| m != full).collect())
}

/// Indicator of whether `mask` separates points `i` and `j`.
#[inline]
pub fn cut_separates(mask: u32, i: usize, j: usize) -> bool {
    ((mask >> i) ^ (mask >> j)) & 1 == 1
}

/// The cut semimetric `d_S(i,j) = |1_S(i) - 1_S(j)|` as a matrix.
pub fn cut_metric(n: usize, mask: u32) -> Result<FiniteMetric, CutConeError> {
    if !(2..=MAX_ENUM_POINTS).contains(&n) {
        return Err(CutConeError::TooLarge { n, cap: MAX_ENUM_POINTS });
    }
    FiniteMetric::from_fn(n, |i, j| if cut_separates(mask, i, j) { 1.0 } else { 0.0 })
        .map_err(|e| CutConeError::Parse(e.to_string()))
}

/// One weighted cut in a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutAtom {
    pub mask: u32,
    pub weight: f64,
}

/// A nonnegative combination of cut semimetrics on `n` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDecomposition {
    pub n: usize,
    pub atoms: Vec<CutAtom>,
}

impl CutDecomposition {
    /// Combined semimetric value at a pair.
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        self.atoms
            .iter()
            .map(|a| if cut_separates(a.mask, i, j) { a.weight } else { 0.0 })
            .sum()
    }

    /// The induced semimetric as a matrix.
    pub fn induced_metric(&self) -> Result<FiniteMetric, CutConeError> {
        FiniteMetric::from_fn(self.n, |i, j| self.eval(i, j))
            .map_err(|e| CutConeError::Parse(e.to_string()))
    }

    /// The canonical L1 embedding: point `i` maps to the vector whose k-th
    /// coordinate is `weight_k * 1[i in S_k]`, so that L1 distances between
    /// images equal [`eval`].
    pub fn embedding(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                self.atoms
                    .iter()
                    .map(|a| if (a.mask >> i) & 1 == 1 { a.weight } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Random decomposition over canonical cuts. All singleton cuts get a
    /// small floor weight so the induced semimetric is a genuine metric
    /// (strictly positive off the diagonal).
    pub fn random(n: usize, extra_atoms: usize, rng: &mut impl Rng) -> Result<Self, CutConeError> {
        let cuts = enumerate_cuts(n)?;
        let mut atoms: Vec<CutAtom> = Vec::new();
        // Singleton of point 0 is {0}; singleton of i > 0 is its complement's
        // canonical representative, the full set minus {i}.
        let full = (1u32 << n) - 1;
        atoms.push(CutAtom { mask: 1, weight: rng.gen_range(0.05..0.5) });
        for i in 1..n {
            atoms.push(CutAtom { mask: full & !(1 << i), weight: rng.gen_range(0.05..0.5) });
        }
        for _ in 0..extra_atoms {
            let mask = cuts[rng.gen_range(0..cuts.len())];
            atoms.push(CutAtom { mask, weight: rng.gen_range(0.0..1.0) });
        }
        Ok(CutDecomposition { n, atoms })
    }
}

/// Residual diagnostics stored inside a [`DistortionCertificate`]; all of
/// these are ~1e-9 or below for a healthy solve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertificateResiduals {
    /// Worst relative violation of `d <= sum λ_S d_S`.
    pub sandwich_lower: f64,
    /// Worst relative violation of `sum λ_S d_S <= c1 d`.
    pub sandwich_upper: f64,
    /// `|sum_{i<j} C_d[i][j] d[i][j] - 1|`.
    pub dual_normalization: f64,
    /// `|sum_{i<j} D_d[i][j] d[i][j] - c1|`.
    pub dual_objective: f64,
    /// Worst violation of `sum C_d d_S >= sum D_d d_S` over all cuts.
    pub dual_cut_feasibility: f64,
    /// Worst `|sum (C_d - D_d) d_S|` over cuts in the decomposition support.
    pub complementary_slackness: f64,
}

impl CertificateResiduals {
    pub fn worst(&self) -> f64 {
        [
            self.sandwich_lower,
            self.sandwich_upper,
            self.dual_normalization,
            self.dual_objective,
            self.dual_cut_feasibility,
            self.complementary_slackness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Exact L1-distortion certificate: the optimal value, a witnessing cut
/// decomposition, and the dual demand matrices extracted from the LP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionCertificate {
    pub c1: f64,
    pub atoms: Vec<CutAtom>,
    pub n: usize,
    /// Symmetric nonnegative matrix from the upper-sandwich multipliers;
    /// normalized so `sum_{i<j} dual_c . d = 1`.
    #[serde(rename = "dualC")]
    pub dual_c: Vec<Vec<f64>>,
    /// Symmetric nonnegative matrix from the lower-sandwich multipliers;
    /// `sum_{i<j} dual_d . d = c1`.
    #[serde(rename = "dualD")]
    pub dual_d: Vec<Vec<f64>>,
    pub residuals: CertificateResiduals,
}

impl DistortionCertificate {
    pub fn decomposition(&self) -> CutDecomposition {
        CutDecomposition { n: self.n, atoms: self.atoms.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, CutConeError> {
        serde_json::from_str(s).map_err(|e| CutConeError::Parse(e.to_string()))
    }
}

fn require_metric(d: &FiniteMetric) -> Result<(), CutConeError> {
    let violations: Vec<TriangleViolation> = check_metric(d);
    if !violations.is_empty() || !d.is_positive() {
        let worst = violations.iter().map(|v| v.slack).fold(0.0, f64::max);
        return Err(CutConeError::NonMetric { violations: violations.len(), worst });
    }
    Ok(())
}

/// Exact L1 distortion of a metric on up to [`MAX_LP_POINTS`] points.
///
/// Solves `min D` over `{ λ >= 0 : d <= sum λ_S d_S <= D d }` by simplex
/// over the canonical cuts, then refines primal and dual through the final
/// basis. Always `c1 >= 1`; `c1 = 1` iff `d` embeds isometrically in L1.
pub fn c1_exact(d: &FiniteMetric) -> Result<DistortionCertificate, CutConeError> {
    let n = d.n();
    if n > MAX_LP_POINTS {
        return Err(CutConeError::TooLarge { n, cap: MAX_LP_POINTS });
    }
    require_metric(d)?;
    let cuts = enumerate_cuts(n)?;
    let ncuts = cuts.len();
    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();

    // Variables: λ_S for each canonical cut, then the distortion D.
    let mut objective = vec![0.0; ncuts + 1];
    objective[ncuts] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    // Lower sandwich rows first (one per pair), then upper rows.
    for &(i, j) in &pairs {
        let mut row = vec![0.0; ncuts + 1];
        for (k, &mask) in cuts.iter().enumerate() {
            if cut_separates(mask, i, j) {
                row[k] = 1.0;
            }
        }
        lp.add_row(row, Rel::Ge, d.dist(i, j));
    }
    for &(i, j) in &pairs {
        let mut row = vec![0.0; ncuts + 1];
        for (k, &mask) in cuts.iter().enumerate() {
            if cut_separates(mask, i, j) {
                row[k] = 1.0;
            }
        }
        row[ncuts] = -d.dist(i, j);
        lp.add_row(row, Rel::Le, 0.0);
    }
    let sol = lp_solve(&lp)?;
    let c1 = sol.objective;

    let atoms: Vec<CutAtom> = cuts
        .iter()
        .enumerate()
        .filter(|(k, _)| sol.x[*k] > 1e-12)
        .map(|(k, &mask)| CutAtom { mask, weight: sol.x[k] })
        .collect();
    let decomposition = CutDecomposition { n, atoms: atoms.clone() };

    // Dual extraction: α from the lower rows (>= 0), β from the upper rows
    // (stored as <= duals, so negated). At the optimum LP duality forces
    // sum β d = 1 (reduced cost of the basic variable D vanishes) and
    // sum α d = c1 (strong duality), which is exactly the normalization the
    // demand pair needs — no further rescaling.
    let np = pairs.len();
    let mut dual_c = vec![vec![0.0; n]; n];
    let mut dual_d = vec![vec![0.0; n]; n];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        let alpha = sol.duals[p].max(0.0);
        let beta = (-sol.duals[np + p]).max(0.0);
        dual_d[i][j] = alpha;
        dual_d[j][i] = alpha;
        dual_c[i][j] = beta;
        dual_c[j][i] = beta;
    }

    // Residual bookkeeping.
    let mut sandwich_lower = 0.0f64;
    let mut sandwich_upper = 0.0f64;
    for &(i, j) in &pairs {
        let emb = decomposition.eval(i, j);
        let dij = d.dist(i, j);
        sandwich_lower = sandwich_lower.max((dij - emb) / dij);
        sandwich_upper = sandwich_upper.max((emb - c1 * dij) / dij);
    }
    let dot = |m: &Vec<Vec<f64>>| -> f64 {
        pairs.iter().map(|&(i, j)| m[i][j] * d.dist(i, j)).sum()
    };
    let dual_normalization = (dot(&dual_c) - 1.0).abs();
    let dual_objective = (dot(&dual_d) - c1).abs() / c1.max(1.0);
    let mut dual_cut_feasibility = 0.0f64;
    let mut complementary_slackness = 0.0f64;
    let support: std::collections::HashSet<u32> = atoms.iter().map(|a| a.mask).collect();
    for &mask in &cuts {
        let mut cross_c = 0.0;
        let mut cross_d = 0.0;
        for &(i, j) in &pairs {
            if cut_separates(mask, i, j) {
                cross_c += dual_c[i][j];
                cross_d += dual_d[i][j];
            }
        }
        dual_cut_feasibility = dual_cut_feasibility.max(cross_d - cross_c);
        if support.contains(&mask) {
            complementary_slackness = complementary_slackness.max((cross_c - cross_d).abs());
        }
    }
    let residuals = CertificateResiduals {
        sandwich_lower: sandwich_lower.max(0.0),
        sandwich_upper: sandwich_upper.max(0.0),
        dual_normalization,
        dual_objective,
        dual_cut_feasibility: dual_cut_feasibility.max(0.0),
        complementary_slackness,
    };

    Ok(DistortionCertificate { c1, atoms, n, dual_c, dual_d, residuals })
}

/// The demand pair certified by the distortion LP, plus its headline
/// invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualDemands {
    pub n: usize,
    pub c1: f64,
    /// Capacity-side demands (from the upper multipliers).
    pub c: Vec<Vec<f64>>,
    /// Demand-side demands (from the lower multipliers).
    pub d: Vec<Vec<f64>>,
    /// `(sum c . d) / (sum d_mat . d)`, equal to `1/c1` at the optimum.
    pub ratio_on_input: f64,
}

/// Drop roundoff dust from a dual matrix: entries below `1e-12 · max` are
/// artifacts of the simplex basis solve, not support pairs. Left in place
/// they poison downstream cut ratios — a cut crossing only a dust demand
/// pair can report a capacity/demand ratio of 0 — while every genuine
/// entry sits far above this scale (protected by the 1e-9 feasibility
/// margin the certificate is validated against).
fn drop_dual_dust(m: &mut [Vec<f64>]) {
    let max = m.iter().flatten().fold(0.0f64, |a, &v| a.max(v.abs()));
    let floor = 1e-12 * max;
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            if v.abs() <= floor {
                *v = 0.0;
            }
        }
    }
}

/// Extract and *validate* the demand pair for a metric: every cut must have
/// capacity/demand ratio at least 1 (within 1e-9), the input metric itself
/// must achieve `1/c1`, and the certificate's complementary-slackness
/// residual must be below 1e-7. Violations surface as
/// [`CutConeError::CertificateInvalid`]. The returned matrices are cleaned
/// of sub-`1e-12·max` roundoff entries; the certificate keeps the raw LP
/// duals its residuals were measured on.
pub fn dual_demands(d: &FiniteMetric) -> Result<(DualDemands, DistortionCertificate), CutConeError> {
    let cert = c1_exact(d)?;
    let n = d.n();
    let tol_cut = 1e-9;
    if cert.residuals.dual_cut_feasibility > tol_cut {
        return Err(CutConeError::CertificateInvalid {
            what: "cut feasibility (some cut has ratio < 1)",
            residual: cert.residuals.dual_cut_feasibility,
            tol: tol_cut,
        });
    }
    if cert.residuals.complementary_slackness > 1e-7 {
        return Err(CutConeError::CertificateInvalid {
            what: "complementary slackness on support cuts",
            residual: cert.residuals.complementary_slackness,
            tol: 1e-7,
        });
    }
    if cert.residuals.dual_normalization > 1e-7 {
        return Err(CutConeError::CertificateInvalid {
            what: "dual normalization sum C.d = 1",
            residual: cert.residuals.dual_normalization,
            tol: 1e-7,
        });
    }
    let mut clean_c = cert.dual_c.clone();
    let mut clean_d = cert.dual_d.clone();
    drop_dual_dust(&mut clean_c);
    drop_dual_dust(&mut clean_d);
    let num: f64 = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| clean_c[i][j] * d.dist(i, j))
        .sum();
    let den: f64 = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| clean_d[i][j] * d.dist(i, j))
        .sum();
    let ratio = num / den;
    let expected = 1.0 / cert.c1;
    if (ratio - expected).abs() > 1e-9 * expected.max(1.0) {
        return Err(CutConeError::CertificateInvalid {
            what: "input metric ratio = 1/c1",
            residual: (ratio - expected).abs(),
            tol: 1e-9,
        });
    }
    let demands = DualDemands {
        n,
        c1: cert.c1,
        c: clean_c,
        d: clean_d,
        ratio_on_input: ratio,
    };
    Ok((demands, cert))
}
