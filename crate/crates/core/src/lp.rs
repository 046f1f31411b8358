//! Dense two-phase simplex for small linear programs.
//!
//! Solves `min c.x` subject to per-row `<=` / `>=` / `=` constraints and
//! `x >= 0`. The pivot loop uses Dantzig pricing and falls back to Bland's
//! anti-cycling rule after a stall, which guarantees termination on
//! degenerate programs (Beale's cycling example is a test fixture below).
//!
//! After the pivot loop finds the optimal basis, the primal point and the
//! dual multipliers are recomputed from a fresh LU factorization of the
//! basis columns of the *original* data, so accumulated tableau roundoff
//! does not leak into reported solutions. Duals follow the convention for
//! minimization: `>= 0` on `>=` rows, `<= 0` on `<=` rows, free on `=` rows,
//! with `b.y = objective` and `A'y <= c` at the optimum.

use crate::linalg::Lu;
use thiserror::Error;

/// Constraint sense of one LP row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rel {
    Le,
    Ge,
    Eq,
}

/// `min objective . x` subject to `rows` and `x >= 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Rel, f64)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
    /// One multiplier per input row, in input order.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("infeasible: phase-1 residual {residual:.3e}")]
    Infeasible { residual: f64 },
    #[error("objective is unbounded below (column {column} can grow freely)")]
    Unbounded { column: usize },
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("bad shape: {0}")]
    BadShape(String),
}

impl LinearProgram {
    pub fn minimize(objective: Vec<f64>) -> Self {
        LinearProgram { num_vars: objective.len(), objective, rows: Vec::new() }
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rel: Rel, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars, "row width must match variable count");
        self.rows.push((coeffs, rel, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }
}

const EPS_PIVOT: f64 = 1e-9;
const EPS_RC: f64 = 1e-9;
const STALL_LIMIT: usize = 16;
const MAX_ITER: usize = 200_000;

struct Tableau {
    m: usize,
    width: usize, // column count plus one; the last column is the RHS
    t: Vec<f64>,
    cost: Vec<f64>, // reduced-cost row; last entry is minus the objective
    basis: Vec<usize>,
    art_start: usize,
    iterations: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] *= inv;
        }
        self.t[r * w + c] = 1.0; // exact unit pivot
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                for j in 0..w {
                    self.t[i * w + j] -= f * self.t[r * w + j];
                }
                self.t[i * w + c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for j in 0..w {
                self.cost[j] -= f * self.t[r * w + j];
            }
            self.cost[c] = 0.0;
        }
        // Feasibility invariant: the RHS column is nonnegative. Roundoff on
        // degenerate pivots can push entries a few ulps below zero; snap
        // those back so later ratio tests stay sound.
        for i in 0..self.m {
            let rhs = &mut self.t[i * w + w - 1];
            if *rhs < 0.0 && *rhs > -1e-9 {
                *rhs = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Entering column: Dantzig (most negative reduced cost) or Bland
    /// (lowest-index negative). `limit` excludes columns at or beyond it
    /// (used to bar artificials in phase 2).
    fn entering(&self, bland: bool, limit: usize, scale: f64) -> Option<usize> {
        let thresh = -EPS_RC * scale;
        if bland {
            (0..limit).find(|&j| self.cost[j] < thresh)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..limit {
                let rc = self.cost[j];
                if rc < thresh && best.map_or(true, |(_, b)| rc < b) {
                    best = Some((j, rc));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    /// Leaving row by the minimum-ratio test; ties resolved by smallest
    /// basis variable index (Bland-compatible). Degenerate right-hand sides
    /// that have drifted a hair negative are treated as exactly zero so the
    /// basis can never walk infeasible.
    fn leaving(&self, col: usize) -> Option<usize> {
        let w = self.width;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.t[r * w + col];
            if a > EPS_PIVOT {
                let ratio = self.t[r * w + w - 1].max(0.0) / a;
                match best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio - 1e-12
                            || (ratio < bratio + 1e-12 && self.basis[r] < self.basis[br])
                        {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }

    /// Run the pivot loop until no column can enter. Returns the entering
    /// column on unboundedness.
    fn run(&mut self, limit: usize, scale: f64) -> Result<(), LpError> {
        let mut bland = false;
        let mut stalled = 0usize;
        let mut last_obj = -self.cost[self.width - 1];
        loop {
            let Some(col) = self.entering(bland, limit, scale) else {
                return Ok(());
            };
            let Some(row) = self.leaving(col) else {
                return Err(LpError::Unbounded { column: col });
            };
            self.pivot(row, col);
            self.iterations += 1;
            if self.iterations > MAX_ITER {
                return Err(LpError::IterationLimit(MAX_ITER));
            }
            let obj = -self.cost[self.width - 1];
            if obj < last_obj - 1e-12 * (1.0 + last_obj.abs()) {
                stalled = 0;
                // A strict improvement means cycling is no longer a risk at
                // this vertex; return to fast pricing.
                bland = false;
            } else {
                stalled += 1;
                if stalled >= STALL_LIMIT {
                    bland = true;
                }
            }
            last_obj = obj;
        }
    }
}

/// Solve the program. See the module docs for conventions and guarantees.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    if lp.num_vars == 0 {
        return Err(LpError::BadShape("no variables".into()));
    }
    let n = lp.num_vars;
    let m = lp.rows.len();

    // Normalize rows to nonnegative RHS, remembering sign flips so the dual
    // multipliers can be mapped back to input rows.
    let mut rows: Vec<(Vec<f64>, Rel, f64, bool)> = lp
        .rows
        .iter()
        .map(|(a, rel, b)| {
            if *b < 0.0 {
                let flipped = match rel {
                    Rel::Le => Rel::Ge,
                    Rel::Ge => Rel::Le,
                    Rel::Eq => Rel::Eq,
                };
                (a.iter().map(|v| -v).collect(), flipped, -b, true)
            } else {
                (a.clone(), *rel, *b, false)
            }
        })
        .collect();

    // Standard-form layout: structural | slack/surplus | artificial.
    let mut n_slack = 0usize;
    for (_, rel, _, _) in &rows {
        if *rel != Rel::Eq {
            n_slack += 1;
        }
    }
    let mut n_art = 0usize;
    for (_, rel, _, _) in &rows {
        if *rel != Rel::Le {
            n_art += 1;
        }
    }
    let slack_start = n;
    let art_start = n + n_slack;
    let ncols = n + n_slack + n_art;
    let width = ncols + 1;

    // Original standard-form data, kept pristine for the LU refinement.
    let mut a_std = vec![0.0; m * ncols];
    let mut b_std = vec![0.0; m];
    let mut c_std = vec![0.0; ncols];
    c_std[..n].copy_from_slice(&lp.objective);

    let mut t = vec![0.0; m * width];
    let mut basis = vec![usize::MAX; m];
    let mut slack_idx = slack_start;
    let mut art_idx = art_start;
    for (r, (a, rel, b, _)) in rows.iter_mut().enumerate() {
        for (j, &v) in a.iter().enumerate() {
            t[r * width + j] = v;
            a_std[r * ncols + j] = v;
        }
        t[r * width + ncols] = *b;
        b_std[r] = *b;
        match rel {
            Rel::Le => {
                t[r * width + slack_idx] = 1.0;
                a_std[r * ncols + slack_idx] = 1.0;
                basis[r] = slack_idx;
                slack_idx += 1;
            }
            Rel::Ge => {
                t[r * width + slack_idx] = -1.0;
                a_std[r * ncols + slack_idx] = -1.0;
                slack_idx += 1;
                t[r * width + art_idx] = 1.0;
                a_std[r * ncols + art_idx] = 1.0;
                basis[r] = art_idx;
                art_idx += 1;
            }
            Rel::Eq => {
                t[r * width + art_idx] = 1.0;
                a_std[r * ncols + art_idx] = 1.0;
                basis[r] = art_idx;
                art_idx += 1;
            }
        }
    }

    let mut tab =
        Tableau { m, width, t, cost: vec![0.0; width], basis, art_start, iterations: 0 };

    // Phase 1: minimize the sum of artificials. Zero out the basic
    // artificial columns of the cost row so reduced costs start consistent.
    if n_art > 0 {
        for j in art_start..ncols {
            tab.cost[j] = 1.0;
        }
        for r in 0..m {
            if tab.basis[r] >= art_start {
                for j in 0..width {
                    tab.cost[j] -= tab.t[r * width + j];
                }
            }
        }
        tab.run(ncols, 1.0)?;
        let resid = -tab.cost[width - 1];
        let b_scale = b_std.iter().cloned().fold(1.0, f64::max);
        if resid > 1e-8 * b_scale {
            return Err(LpError::Infeasible { residual: resid });
        }
        // Drive remaining artificials out of the basis; rows where that is
        // impossible are redundant and harmless (the artificial stays basic
        // at level zero and its row never constrains phase 2 because the
        // artificial columns are barred from entering).
        for r in 0..m {
            if tab.basis[r] >= art_start {
                if let Some(c) = (0..art_start).find(|&c| tab.at(r, c).abs() > EPS_PIVOT) {
                    tab.pivot(r, c);
                }
            }
        }
    }

    // Phase 2: restore the real objective and re-derive reduced costs.
    let cost_scale = lp.objective.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    tab.cost = vec![0.0; width];
    tab.cost[..n].copy_from_slice(&lp.objective);
    for r in 0..m {
        let f = tab.cost[tab.basis[r]];
        if f != 0.0 {
            for j in 0..width {
                tab.cost[j] -= f * tab.t[r * width + j];
            }
        }
    }
    tab.run(tab.art_start, cost_scale)?;

    // Refine primal and dual from the original data through the final basis.
    let basis_cols: Vec<Vec<f64>> = (0..m)
        .map(|r| (0..m).map(|i| a_std[i * ncols + tab.basis[r]]).collect())
        .collect();
    // basis_cols above is column-major (one Vec per basis column); transpose
    // into the row-major form the LU expects.
    let b_mat: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|r| basis_cols[r][i]).collect()).collect();
    let (x_basic, y_std) = match Lu::factor(&b_mat) {
        Ok(lu) => {
            let xb = lu.solve(&b_std);
            let cb: Vec<f64> = (0..m).map(|r| c_std[tab.basis[r]]).collect();
            (xb, lu.solve_transpose(&cb))
        }
        Err(_) => {
            // Fall back to tableau values (possible only for a numerically
            // borderline basis; the tableau is still a valid solution).
            let xb: Vec<f64> = (0..m).map(|r| tab.at(r, ncols)).collect();
            let y: Vec<f64> = vec![0.0; m];
            (xb, y)
        }
    };

    let mut x = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < n {
            // Clamp the tiny negative dust a refined degenerate basis can
            // produce; genuine infeasibility was already ruled out.
            x[tab.basis[r]] = x_basic[r].max(0.0);
        }
    }
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    let duals: Vec<f64> =
        rows.iter().enumerate().map(|(r, (_, _, _, flipped))| if *flipped { -y_std[r] } else { y_std[r] }).collect();

    Ok(LpSolution { objective, x, duals, iterations: tab.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ~ {b} (tol {tol})");
    }

    #[test]
    fn one_variable_bound() {
        // min x subject to x >= 3.
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_row(vec![1.0], Rel::Ge, 3.0);
        let s = lp_solve(&lp).unwrap();
        assert_close(s.objective, 3.0, 1e-12);
        assert_close(s.x[0], 3.0, 1e-12);
        // Dual of the single binding >= row is 1.
        assert_close(s.duals[0], 1.0, 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded_are_reported() {
        let mut lp = LinearProgram::minimize(vec![1.0]);
        lp.add_row(vec![1.0], Rel::Le, 1.0);
        lp.add_row(vec![1.0], Rel::Ge, 2.0);
        assert!(matches!(lp_solve(&lp), Err(LpError::Infeasible { .. })));

        let mut lp = LinearProgram::minimize(vec![-1.0]);
        lp.add_row(vec![-1.0], Rel::Le, 1.0);
        assert!(matches!(lp_solve(&lp), Err(LpError::Unbounded { .. })));
    }

    #[test]
    fn beale_cycling_example_terminates_at_optimum() {
        // Beale's classic degenerate program; naive Dantzig pricing with
        // index tie-breaking cycles forever, the Bland fallback must not.
        let mut lp = LinearProgram::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Rel::Le, 0.0);
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Rel::Le, 0.0);
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Rel::Le, 1.0);
        let s = lp_solve(&lp).unwrap();
        assert_close(s.objective, -0.05, 1e-9);
        assert_close(s.x[0], 0.04, 1e-9);
        assert_close(s.x[2], 1.0, 1e-9);
    }

    #[test]
    fn equality_rows_and_negative_rhs() {
        // min x + y subject to x - y = -2, x + y >= 4  ->  x = 1, y = 3.
        let mut lp = LinearProgram::minimize(vec![1.0, 1.0]);
        lp.add_row(vec![1.0, -1.0], Rel::Eq, -2.0);
        lp.add_row(vec![1.0, 1.0], Rel::Ge, 4.0);
        let s = lp_solve(&lp).unwrap();
        assert_close(s.objective, 4.0, 1e-10);
        assert_close(s.x[0], 1.0, 1e-10);
        assert_close(s.x[1], 3.0, 1e-10);
    }

    /// Random programs with a guaranteed feasible point; whenever the solver
    /// claims optimality, strong duality and complementary slackness must
    /// hold to near machine precision thanks to the LU refinement.
    #[test]
    fn random_programs_have_zero_duality_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut optimal = 0;
        for _ in 0..200 {
            let n = rng.gen_range(2..6);
            let m = rng.gen_range(1..7);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
            let mut lp = LinearProgram::minimize(
                (0..n).map(|_| rng.gen_range(-1.0..2.0)).collect(),
            );
            let mut rows = Vec::new();
            for _ in 0..m {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ax: f64 = a.iter().zip(&x0).map(|(u, v)| u * v).sum();
                // Slide the RHS so x0 stays feasible.
                let (rel, b) = match rng.gen_range(0..3) {
                    0 => (Rel::Le, ax + rng.gen_range(0.0..1.0)),
                    1 => (Rel::Ge, ax - rng.gen_range(0.0..1.0)),
                    _ => (Rel::Eq, ax),
                };
                rows.push((a.clone(), rel, b));
                lp.add_row(a, rel, b);
            }
            let s = match lp_solve(&lp) {
                Ok(s) => s,
                Err(LpError::Unbounded { .. }) => continue,
                Err(e) => panic!("random feasible LP failed: {e}"),
            };
            optimal += 1;
            // Strong duality: b.y == objective.
            let by: f64 = rows.iter().zip(&s.duals).map(|((_, _, b), y)| b * y).sum();
            assert_close(by, s.objective, 1e-7 * (1.0 + s.objective.abs()));
            // Dual feasibility and sign conventions.
            for ((_, rel, _), &y) in rows.iter().zip(&s.duals) {
                match rel {
                    Rel::Ge => assert!(y >= -1e-8, "dual sign violated on >= row: {y}"),
                    Rel::Le => assert!(y <= 1e-8, "dual sign violated on <= row: {y}"),
                    Rel::Eq => {}
                }
            }
            for j in 0..n {
                let aj_y: f64 = rows.iter().zip(&s.duals).map(|((a, _, _), y)| a[j] * y).sum();
                let rc = lp.objective[j] - aj_y;
                assert!(rc >= -1e-7, "dual infeasible at column {j}: reduced cost {rc}");
                // Complementary slackness.
                assert!(s.x[j] * rc < 1e-6, "complementary slackness violated");
            }
        }
        assert!(optimal >= 100, "too few optimal instances to be meaningful: {optimal}");
    }

    #[test]
    fn iteration_count_is_reported() {
        let mut lp = LinearProgram::minimize(vec![-1.0, -1.0]);
        lp.add_row(vec![1.0, 0.0], Rel::Le, 1.0);
        lp.add_row(vec![0.0, 1.0], Rel::Le, 1.0);
        let s = lp_solve(&lp).unwrap();
        assert!(s.iterations >= 2);
        assert_close(s.objective, -2.0, 1e-12);
    }
}
