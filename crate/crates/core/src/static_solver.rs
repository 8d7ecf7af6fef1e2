//! Exact solvers for the static balanced problem, randomized and
//! deterministic, and the instances that separate the two.

use serde::{Deserialize, Serialize};

use crate::model::{
    mnl_revenue, revenue_ordered_optimum, Instance, ModelError, SalesVector,
};

/// Slack used when comparing revenues against the optimum `R*`.
pub fn revenue_slack(rstar: f64) -> f64 {
    1e-9 * rstar.max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSolution {
    pub xs: SalesVector,
    /// Optimal expected revenue `R*`.
    pub revenue: f64,
    /// Smallest revenue among products with `r_i ≥ R*`.
    pub threshold_r: f64,
    /// Weight threshold: offered products satisfy `v_i ≥ threshold_v`.
    pub threshold_v: f64,
    pub support: Vec<usize>,
}

/// Products with `r_i ≥ r_hat` and `v_i ≥ v_hat`, weighted by `min(v_i, v_hat/α)`.
///
/// Returns the resulting sales vector and its revenue.
pub fn threshold_candidate(inst: &Instance, r_hat: f64, v_hat: f64) -> (SalesVector, f64) {
    let (r, v, alpha) = (inst.r(), inst.v(), inst.alpha());
    let support: Vec<usize> = (0..inst.n())
        .filter(|&i| r[i] >= r_hat && v[i] >= v_hat)
        .collect();
    let w: Vec<f64> = v.iter().map(|&vi| vi.min(v_hat / alpha)).collect();
    let xs = SalesVector::from_weights(&w, &support);
    let rev = mnl_revenue(r, &w, &support);
    (xs, rev)
}

pub(crate) fn distinct_sorted(values: &[f64]) -> Vec<f64> {
    let mut out = values.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Orders candidate supports: larger revenue first, then fewer products,
/// then lexicographically smaller index lists.
pub(crate) fn prefer(
    rev: f64,
    set: &[usize],
    best_rev: f64,
    best_set: &[usize],
) -> bool {
    if !best_rev.is_finite() {
        return true;
    }
    let tie = 1e-12 * best_rev.abs().max(1.0);
    if rev > best_rev + tie {
        return true;
    }
    if rev < best_rev - tie {
        return false;
    }
    (set.len(), set) < (best_set.len(), best_set)
}

/// Optimal randomized policy for the static problem.
///
/// Every pair of thresholds `(r̂, v̂)` drawn from the product data is tried;
/// the optimum is always among them.
pub fn solve_bms(inst: &Instance) -> StaticSolution {
    let (r, v) = (inst.r(), inst.v());
    let r_vals = distinct_sorted(r);
    let v_vals = distinct_sorted(v);

    let mut best_rev = f64::NEG_INFINITY;
    let mut best_set: Vec<usize> = Vec::new();
    let mut best_v = v_vals[0];
    for &v_hat in &v_vals {
        for &r_hat in &r_vals {
            let set: Vec<usize> = (0..inst.n())
                .filter(|&i| r[i] >= r_hat && v[i] >= v_hat)
                .collect();
            if set.is_empty() {
                continue;
            }
            let (_, rev) = threshold_candidate(inst, r_hat, v_hat);
            if prefer(rev, &set, best_rev, &best_set) {
                best_rev = rev;
                best_set = set;
                best_v = v_hat;
            }
        }
    }

    // Report the support in its canonical nested form.
    let slack = revenue_slack(best_rev);
    let threshold_r = r
        .iter()
        .copied()
        .filter(|&ri| ri >= best_rev - slack)
        .fold(f64::INFINITY, f64::min);
    let (xs, revenue) = threshold_candidate(inst, threshold_r, best_v);
    let support = xs.support();
    StaticSolution {
        xs,
        revenue,
        threshold_r,
        threshold_v: best_v,
        support,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSolution {
    pub assortment: Vec<usize>,
    pub revenue: f64,
}

/// Best single assortment whose weights are pairwise within a factor `α`.
pub fn solve_bms_deterministic(inst: &Instance) -> DeterministicSolution {
    let (r, v, alpha) = (inst.r(), inst.v(), inst.alpha());
    let mut best_rev = 0.0;
    let mut best_set = Vec::new();
    for &v_lo in &distinct_sorted(v) {
        let v_hi = v_lo / alpha * (1.0 + 1e-12);
        let allowed: Vec<usize> = (0..inst.n())
            .filter(|&i| v[i] >= v_lo && v[i] <= v_hi)
            .collect();
        let (set, rev) = revenue_ordered_optimum(r, v, &allowed);
        if !set.is_empty() && prefer(rev, &set, best_rev, &best_set) {
            best_rev = rev;
            best_set = set;
        }
    }
    DeterministicSolution {
        assortment: best_set,
        revenue: best_rev,
    }
}

/// Instance on which randomization beats every feasible single assortment
/// by a factor growing like `min{1/(1-α), n}`.
///
/// When `α > 1 - 1/n` the weights shrink geometrically by `1 - 1/n`;
/// otherwise by `α(1-ε)`. Revenues are reciprocal to weights, so every single
/// product earns less than one unit.
pub fn make_gap_instance(n: usize, alpha: f64) -> Result<Instance, ModelError> {
    if n == 0 {
        return Err(ModelError::Empty);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(ModelError::Alpha(alpha));
    }
    let e = std::f64::consts::E;
    let nf = n as f64;
    let v: Vec<f64> = if n == 1 {
        vec![1.0 - 2.0 / e]
    } else if alpha > 1.0 - 1.0 / nf {
        let eps = (1.0 - 2.0 / e) / nf;
        (1..=n).map(|i| (1.0 - 1.0 / nf).powi(i as i32) * eps).collect()
    } else {
        let eps = ((2.0 - 2.0 / e).sqrt() - 1.0) / nf;
        (1..=n)
            .map(|i| (alpha * (1.0 - eps)).powi(i as i32) * eps)
            .collect()
    };
    let r = v.iter().map(|vi| 1.0 / vi).collect();
    Instance::new(r, v, alpha)
}

/// Lower and upper bounds on `R* / R*_det` for an `n`-product instance.
pub fn gap_bounds(n: usize, alpha: f64) -> (f64, f64) {
    let nf = n as f64;
    if alpha >= 1.0 {
        return (nf / 2.0, nf);
    }
    let lower = (1.0 / (2.0 * (1.0 - alpha))).min(nf / 2.0);
    let upper = (2.0 / (1.0 - alpha)).min(nf);
    (lower, upper)
}
