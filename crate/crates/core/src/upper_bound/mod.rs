//! The fluid relaxation of the inventory-constrained problem.
//!
//! Over `T` periods the seller picks average per-period purchase
//! probabilities `x` with `x0 + Σ x_i = 1`, `0 ≤ x_i ≤ v_i x0`,
//! `x_i ≤ c_i / T` and the balancing constraint on the nonzero entries,
//! maximizing `T Σ r_i x_i`. Its optimum bounds the expected revenue of every
//! dynamic policy.

mod fptas;
pub mod mckp;

pub use fptas::{solve_upper_bound_fptas, GridStats};
pub use mckp::{solve_mckp, MckpInstance, MckpItem, MckpSelection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpStatus, Sense, Simplex};
use crate::model::{support_of, ConstraintKind, DynamicInstance, FeasibilityReport, SalesVector};
use crate::static_solver::prefer;

/// Default cap on the number of products for [`solve_upper_bound_exact`].
pub const EXACT_N_MAX: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpperBoundError {
    #[error("eps = {0} must lie in (0, 1/2)")]
    Epsilon(f64),
    #[error("the alpha = 1 solver needs alpha = 1, got {0}")]
    NotAlphaOne(f64),
    #[error("exact enumeration limited to {n_max} products, got {n}")]
    TooLarge { n: usize, n_max: usize },
    #[error("linear program failed on support {support:?}: {reason}")]
    Lp { support: Vec<usize>, reason: String },
}

impl From<LpError> for UpperBoundError {
    fn from(e: LpError) -> Self {
        UpperBoundError::Lp {
            support: Vec::new(),
            reason: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fptas,
    AlphaOne,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundSolution {
    pub xs: SalesVector,
    /// `T Σ r_i x_i`.
    pub objective: f64,
    /// Accuracy parameter; 0 for exact methods.
    pub epsilon: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridStats>,
}

impl UpperBoundSolution {
    pub(crate) fn from_x(dyn_: &DynamicInstance, x: Vec<f64>, epsilon: f64, method: Method) -> Self {
        let xs = SalesVector::from_purchases(x);
        let objective = dyn_.horizon() as f64 * xs.revenue(dyn_.r());
        Self {
            xs,
            objective,
            epsilon,
            method,
            grid: None,
        }
    }

    pub fn support(&self) -> Vec<usize> {
        support_of(&self.xs.x)
    }
}

/// Checks all constraint families of the relaxation, with `tol` relative to
/// the magnitudes on either side of each constraint.
pub fn check_upper_bound_feasible(
    dyn_: &DynamicInstance,
    xs: &SalesVector,
    tol: f64,
) -> FeasibilityReport {
    let mut rep = crate::model::check_bms_feasible(dyn_.base(), xs, tol);
    if xs.x.len() == dyn_.n() {
        for (i, &xi) in xs.x.iter().enumerate() {
            let cap = dyn_.sales_cap(i);
            if xi - cap > tol * cap {
                rep.violations.push(crate::model::Violation {
                    constraint: ConstraintKind::Inventory,
                    index: Some(i),
                    magnitude: xi - cap,
                });
            }
        }
    }
    rep
}

/// How the balancing constraint is linearized on a fixed support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceEncoding {
    /// `x_i ≥ α x_j` for every ordered pair.
    Pairwise,
    /// `α y ≤ x_i ≤ y` with one auxiliary variable `y`.
    Auxiliary,
}

/// The relaxation restricted to `support` as a linear program.
///
/// Variables are `x_i` for `i ∈ support` in order, then `x0`, then `y` when
/// the auxiliary encoding is used.
pub fn support_lp(
    dyn_: &DynamicInstance,
    support: &[usize],
    encoding: BalanceEncoding,
) -> LinearProgram {
    let k = support.len();
    let aux = encoding == BalanceEncoding::Auxiliary;
    let nv = k + 1 + usize::from(aux);
    let (r, v, alpha) = (dyn_.r(), dyn_.v(), dyn_.alpha());
    let mut obj = vec![0.0; nv];
    for (a, &i) in support.iter().enumerate() {
        obj[a] = r[i];
    }
    let mut lp = LinearProgram::new(nv).maximize(obj);
    let x0 = k;
    let mut simplex_row = vec![1.0; k + 1];
    simplex_row.resize(nv, 0.0);
    lp.add_row(simplex_row, Sense::Eq, 1.0);
    for (a, &i) in support.iter().enumerate() {
        lp.add_sparse_row(&[(a, 1.0), (x0, -v[i])], Sense::Le, 0.0);
        lp.set_bounds(a, 0.0, dyn_.sales_cap(i));
    }
    if aux {
        let y = k + 1;
        for a in 0..k {
            lp.add_sparse_row(&[(a, 1.0), (y, -1.0)], Sense::Le, 0.0);
            lp.add_sparse_row(&[(a, 1.0), (y, -alpha)], Sense::Ge, 0.0);
        }
    } else {
        for a in 0..k {
            for b in 0..k {
                if a != b {
                    lp.add_sparse_row(&[(a, 1.0), (b, -alpha)], Sense::Ge, 0.0);
                }
            }
        }
    }
    lp
}

/// Solves [`support_lp`] and maps the result back to a full vector.
pub fn solve_support_lp(
    dyn_: &DynamicInstance,
    support: &[usize],
    encoding: BalanceEncoding,
    simplex: &mut Simplex,
) -> Result<(Vec<f64>, f64), UpperBoundError> {
    let lp = support_lp(dyn_, support, encoding);
    let sol = simplex.solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(UpperBoundError::Lp {
            support: support.to_vec(),
            reason: format!("status {:?}", sol.status),
        });
    }
    let mut x = vec![0.0; dyn_.n()];
    for (a, &i) in support.iter().enumerate() {
        x[i] = sol.x[a];
    }
    Ok((x, sol.objective))
}

/// Exact optimum by enumerating supports and solving one LP per support.
pub fn solve_upper_bound_exact(
    dyn_: &DynamicInstance,
    n_max: usize,
) -> Result<UpperBoundSolution, UpperBoundError> {
    solve_upper_bound_exact_with(dyn_, n_max, BalanceEncoding::Auxiliary)
}

pub fn solve_upper_bound_exact_with(
    dyn_: &DynamicInstance,
    n_max: usize,
    encoding: BalanceEncoding,
) -> Result<UpperBoundSolution, UpperBoundError> {
    let n = dyn_.n();
    if n > n_max || n >= 63 {
        return Err(UpperBoundError::TooLarge { n, n_max });
    }
    let mut simplex = Simplex::default();
    let mut best_x = vec![0.0; n];
    let mut best_val = 0.0;
    let mut best_set: Vec<usize> = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let (x, val) = solve_support_lp(dyn_, &set, encoding, &mut simplex)?;
        if prefer(val, &set, best_val, &best_set) {
            best_val = val;
            best_set = set;
            best_x = x;
        }
    }
    // Entries driven to numerical zero are treated as not offered.
    let xmax = best_x.iter().cloned().fold(0.0, f64::max);
    for xi in &mut best_x {
        if *xi < 1e-14 * xmax.max(1e-300) {
            *xi = 0.0;
        }
    }
    Ok(UpperBoundSolution::from_x(dyn_, best_x, 0.0, Method::Exact))
}

/// Exact optimum when `α = 1`: every offered product sells at the same rate.
///
/// The common rate `x̄` is either an inventory cap `c_i / T` or makes some
/// product's MNL constraint tight, `v_i / (1 + k v_i)`. For each rate and
/// count `k` the `k` highest-revenue eligible products are offered.
pub fn solve_upper_bound_alpha1(
    dyn_: &DynamicInstance,
) -> Result<UpperBoundSolution, UpperBoundError> {
    if (dyn_.alpha() - 1.0).abs() > 1e-12 {
        return Err(UpperBoundError::NotAlphaOne(dyn_.alpha()));
    }
    let (n, r, v) = (dyn_.n(), dyn_.r(), dyn_.v());
    let mut rates: Vec<f64> = (0..n).map(|i| dyn_.sales_cap(i)).collect();
    for &vi in v {
        rates.extend((1..=n).map(|l| vi / (1.0 + l as f64 * vi)));
    }
    let mut by_revenue: Vec<usize> = (0..n).collect();
    by_revenue.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));

    let mut best_val = 0.0;
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_rate = 0.0;
    for &xbar in &rates {
        for k in 1..=n {
            let x0 = 1.0 - k as f64 * xbar;
            if x0 <= 0.0 {
                break;
            }
            let mut set: Vec<usize> = by_revenue
                .iter()
                .copied()
                .filter(|&i| {
                    dyn_.sales_cap(i) >= xbar * (1.0 - 1e-12) && v[i] * (1.0 + 1e-12) >= xbar / x0
                })
                .take(k)
                .collect();
            if set.len() < k {
                continue;
            }
            set.sort_unstable();
            let val: f64 = set.iter().map(|&i| r[i] * xbar).sum();
            if prefer(val, &set, best_val, &best_set) {
                best_val = val;
                best_set = set;
                best_rate = xbar;
            }
        }
    }
    let mut x = vec![0.0; n];
    for &i in &best_set {
        x[i] = best_rate;
    }
    Ok(UpperBoundSolution::from_x(dyn_, x, 0.0, Method::AlphaOne))
}
