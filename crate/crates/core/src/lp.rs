//! Dense two-phase simplex for small linear programs.
//!
//! Problems are stated as maximization over variables with (possibly
//! infinite) bounds and rows tagged `≤`, `=` or `≥`. Pivoting follows Bland's
//! rule, so the method terminates on degenerate problems; an iteration guard
//! reports [`LpStatus::IterationLimit`] if floating-point noise defeats it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Phase-1 optimum above this declares the problem infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-8;

const PIVOT_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-10;
const HARRIS_TOL: f64 = 1e-11;
const RHS_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `max c·x` subject to rows and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `n` variables, zero objective, bounds `[0, ∞)`.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn maximize(mut self, c: Vec<f64>) -> Self {
        self.objective = c;
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coeffs, sense, rhs });
    }

    /// Adds a row given as sparse `(index, coefficient)` pairs.
    pub fn add_sparse_row(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        self.add_row(coeffs, sense, rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "{n} variables but {} lower / {} upper bounds",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {k} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::NonFinite(format!("row {k}")));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::NonFinite(format!("bounds of variable {j}")));
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, x)| a * x).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        for (j, &xj) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - xj).max(xj - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite data in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot guard was exhausted; the result is unusable.
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point; empty unless `status` is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn bare(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            iterations,
        }
    }
}

/// Solves `lp` with a fresh [`Simplex`].
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    Simplex::default().solve(lp)
}

// How an original variable is expressed through nonnegative columns.
#[derive(Clone, Copy)]
enum VarMap {
    // x = offset + y
    Shift { col: usize, offset: f64 },
    // x = offset - y
    Flip { col: usize, offset: f64 },
    // x = y+ - y-
    Free { pos: usize, neg: usize },
}

/// Simplex workspace; buffers are reused across calls to [`Simplex::solve`].
#[derive(Default)]
pub struct Simplex {
    tab: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
    width: usize,
    rows: usize,
}

impl Simplex {
    pub fn solve(&mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let n = lp.num_vars();

        // Columns for the structural variables.
        let mut maps = Vec::with_capacity(n);
        let mut ncols = 0;
        let mut bound_rows: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let m = if l.is_finite() {
                if u.is_finite() {
                    bound_rows.push((ncols, u - l));
                }
                VarMap::Shift { col: ncols, offset: l }
            } else if u.is_finite() {
                VarMap::Flip { col: ncols, offset: u }
            } else {
                ncols += 1;
                VarMap::Free {
                    pos: ncols - 1,
                    neg: ncols,
                }
            };
            ncols += 1;
            maps.push(m);
        }
        let nstruct = ncols;

        // Rows over structural columns with nonnegative right-hand sides.
        let mut std_rows: Vec<(Vec<f64>, Sense, f64)> =
            Vec::with_capacity(lp.rows.len() + bound_rows.len());
        for row in &lp.rows {
            let mut a = vec![0.0; nstruct];
            let mut rhs = row.rhs;
            for (j, &coef) in row.coeffs.iter().enumerate() {
                if coef == 0.0 {
                    continue;
                }
                match maps[j] {
                    VarMap::Shift { col, offset } => {
                        a[col] += coef;
                        rhs -= coef * offset;
                    }
                    VarMap::Flip { col, offset } => {
                        a[col] -= coef;
                        rhs -= coef * offset;
                    }
                    VarMap::Free { pos, neg } => {
                        a[pos] += coef;
                        a[neg] -= coef;
                    }
                }
            }
            std_rows.push((a, row.sense, rhs));
        }
        for &(col, width) in &bound_rows {
            let mut a = vec![0.0; nstruct];
            a[col] = 1.0;
            std_rows.push((a, Sense::Le, width));
        }
        for (a, sense, rhs) in std_rows.iter_mut() {
            if *rhs < 0.0 {
                a.iter_mut().for_each(|x| *x = -*x);
                *rhs = -*rhs;
                *sense = match *sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
        }

        let m = std_rows.len();
        let n_slack = std_rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let n_art = std_rows.iter().filter(|r| r.1 != Sense::Le).count();
        let total = nstruct + n_slack + n_art;
        let art_start = nstruct + n_slack;
        self.width = total + 1;
        self.rows = m;
        self.tab.clear();
        self.tab.resize(m * self.width, 0.0);
        self.basis.clear();
        self.banned.clear();
        self.banned.resize(total, false);

        let (mut s, mut a_idx) = (nstruct, art_start);
        for (i, (a, sense, rhs)) in std_rows.iter().enumerate() {
            let row = &mut self.tab[i * self.width..(i + 1) * self.width];
            row[..nstruct].copy_from_slice(a);
            row[total] = *rhs;
            match sense {
                Sense::Le => {
                    row[s] = 1.0;
                    self.basis.push(s);
                    s += 1;
                }
                Sense::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a_idx] = 1.0;
                    self.basis.push(a_idx);
                    a_idx += 1;
                }
                Sense::Eq => {
                    row[a_idx] = 1.0;
                    self.basis.push(a_idx);
                    a_idx += 1;
                }
            }
        }

        let guard = 50 * (m + total) + 1000;
        let mut iterations = 0;

        // Phase 1: maximize minus the sum of artificials.
        if n_art > 0 {
            let mut c = vec![0.0; total];
            c[art_start..].iter_mut().for_each(|x| *x = -1.0);
            self.price(&c);
            match self.iterate(guard, &mut iterations) {
                Phase::Optimal => {}
                Phase::Unbounded => unreachable!("phase 1 is bounded"),
                Phase::Limit => return Ok(LpSolution::bare(LpStatus::IterationLimit, iterations)),
            }
            let infeas: f64 = (0..m)
                .filter(|&i| self.basis[i] >= art_start)
                .map(|i| self.rhs(i))
                .sum();
            if infeas > INFEASIBILITY_TOL {
                return Ok(LpSolution::bare(LpStatus::Infeasible, iterations));
            }
            // Drive zero-level artificials out where possible.
            for i in 0..m {
                if self.basis[i] < art_start {
                    continue;
                }
                let row = &self.tab[i * self.width..i * self.width + art_start];
                if let Some(j) = (0..art_start).find(|&j| row[j].abs() > 1e-9) {
                    self.pivot(i, j);
                }
            }
            self.banned[art_start..].iter_mut().for_each(|b| *b = true);
        }

        // Phase 2.
        let mut c = vec![0.0; total];
        for (j, &cj) in lp.objective.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, .. } => c[col] += cj,
                VarMap::Flip { col, .. } => c[col] -= cj,
                VarMap::Free { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }
        self.price(&c);
        match self.iterate(guard, &mut iterations) {
            Phase::Optimal => {}
            Phase::Unbounded => return Ok(LpSolution::bare(LpStatus::Unbounded, iterations)),
            Phase::Limit => return Ok(LpSolution::bare(LpStatus::IterationLimit, iterations)),
        }

        let mut y = vec![0.0; total];
        for i in 0..m {
            y[self.basis[i]] = self.rhs(i).max(0.0);
        }
        let mut x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                VarMap::Shift { col, offset } => offset + y[col],
                VarMap::Flip { col, offset } => offset - y[col],
                VarMap::Free { pos, neg } => y[pos] - y[neg],
            })
            .collect();
        for j in 0..n {
            x[j] = x[j].clamp(lp.lower[j], lp.upper[j]);
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            iterations,
        })
    }

    fn rhs(&self, i: usize) -> f64 {
        self.tab[i * self.width + self.width - 1]
    }

    // Reduced costs d_j = c_j - c_B B^-1 A_j for the current basis.
    fn price(&mut self, c: &[f64]) {
        self.cost.clear();
        self.cost.extend_from_slice(c);
        self.cost.push(0.0);
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * self.width..(i + 1) * self.width];
            for (d, a) in self.cost.iter_mut().zip(row) {
                *d -= cb * a;
            }
        }
    }

    fn iterate(&mut self, guard: usize, iterations: &mut usize) -> Phase {
        let total = self.width - 1;
        loop {
            if *iterations >= guard {
                return Phase::Limit;
            }
            // Bland: lowest-index improving column.
            let Some(enter) = (0..total).find(|&j| !self.banned[j] && self.cost[j] > COST_TOL)
            else {
                return Phase::Optimal;
            };
            // Harris two-pass ratio test: bound the step with slightly relaxed
            // right-hand sides, then take the largest pivot within the bound.
            let w = self.width;
            let mut bound = f64::INFINITY;
            for i in 0..self.rows {
                let a = self.tab[i * w + enter];
                if a > PIVOT_TOL {
                    bound = bound.min((self.rhs(i).max(0.0) + HARRIS_TOL) / a);
                }
            }
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.tab[i * w + enter];
                if a > PIVOT_TOL && self.rhs(i).max(0.0) / a <= bound {
                    let better = match leave {
                        None => true,
                        Some((k, best)) => a > best || (a == best && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, a));
                    }
                }
            }
            let Some((row, _)) = leave else {
                return Phase::Unbounded;
            };
            self.pivot(row, enter);
            *iterations += 1;
        }
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width;
        let p = self.tab[r * w + col];
        for k in 0..w {
            self.tab[r * w + k] /= p;
        }
        self.tab[r * w + col] = 1.0;
        let (before, rest) = self.tab.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[col];
            if f != 0.0 {
                for (x, &pk) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pk;
                }
                row[col] = 0.0;
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for (x, &pk) in self.cost.iter_mut().zip(prow.iter()) {
                *x -= f * pk;
            }
            self.cost[col] = 0.0;
        }
        // Keep right-hand sides from drifting below zero.
        for i in 0..self.rows {
            let idx = i * w + w - 1;
            if self.tab[idx] < 0.0 && self.tab[idx] > -RHS_CLAMP {
                self.tab[idx] = 0.0;
            }
        }
        self.basis[r] = col;
    }
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
}
