//! Dynamic policies for the finite-horizon problem with inventories.
//!
//! The fixed-target policy aims for a constant purchase probability `x̂_i`
//! for each product until it sells out. With `α < 1` the targets come from
//! the fluid relaxation and are lowered by bisection so that expected capped
//! sales `G(x̂_i, c_i) = E[min(Bin(T, x̂_i), c_i)]` stay within a factor `α` of
//! each other. With `α = 1` every offered product is instead capped at the
//! smallest inventory among them.
//!
//! The resolving heuristics re-solve a history-aware LP over time.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpStatus, Sense, Simplex};
use crate::model::{support_of, DynamicInstance};
use crate::upper_bound::{
    solve_upper_bound_alpha1, solve_upper_bound_fptas, BalanceEncoding, UpperBoundError,
};

/// `|α - 1|` below this selects the capping policy.
pub const ALPHA_ONE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("horizon must be at least 1")]
    Horizon,
    #[error("eps = {0} must lie in (0, 1)")]
    Epsilon(f64),
    #[error("target vector has {got} entries, expected {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("bisection for product {product} left the band after {iterations} iterations")]
    BisectionCap { product: usize, iterations: usize },
    #[error("resolving LP at period {period} returned {status:?}")]
    Resolve { period: u64, status: LpStatus },
    #[error("cumulative balancing broken at period {period}: product {low} vs {high}")]
    Balancing { period: u64, low: usize, high: usize },
    #[error(transparent)]
    UpperBound(#[from] UpperBoundError),
    #[error(transparent)]
    Lp(#[from] LpError),
}

// Neumaier compensated summation.
#[derive(Default)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

// Binomial(T, p) pmf for 0 < p < 1.
fn binomial_pmf(t: u64, p: f64) -> Vec<f64> {
    let n = t as usize;
    let mut pmf = vec![0.0; n + 1];
    let odds = p / (1.0 - p);
    let log_q = t as f64 * (-p).ln_1p();
    if log_q > -600.0 {
        pmf[0] = if t <= i32::MAX as u64 {
            (1.0 - p).powi(t as i32)
        } else {
            log_q.exp()
        };
        for k in 0..n {
            pmf[k + 1] = pmf[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
        }
        return pmf;
    }
    // Start at the mode and walk outward, then normalize.
    let m = (((t + 1) as f64 * p).floor() as usize).min(n);
    pmf[m] = (ln_binomial(t, m as u64) + m as f64 * p.ln() + (n - m) as f64 * (-p).ln_1p()).exp();
    for k in m..n {
        pmf[k + 1] = pmf[k] * ((n - k) as f64 / (k + 1) as f64) * odds;
        if pmf[k + 1] < 1e-300 {
            break;
        }
    }
    for k in (1..=m).rev() {
        pmf[k - 1] = pmf[k] * (k as f64 / (n - k + 1) as f64) / odds;
        if pmf[k - 1] < 1e-300 {
            break;
        }
    }
    let mut total = Sum::default();
    pmf.iter().for_each(|&q| total.add(q));
    let total = total.value();
    pmf.iter_mut().for_each(|q| *q /= total);
    pmf
}

/// `E[min(Binomial(T, p), c)]`: expected sales of a product bought with
/// probability `p` in each of `T` periods and stocked with `c` units.
pub fn capped_mean_sales(t: u64, p: f64, c: u64) -> Result<f64, PolicyError> {
    if t == 0 {
        return Err(PolicyError::Horizon);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PolicyError::Probability(p));
    }
    let tf = t as f64;
    if p == 0.0 || c == 0 {
        return Ok(0.0);
    }
    if c >= t {
        return Ok(tf * p);
    }
    if p == 1.0 {
        return Ok(c as f64);
    }
    let pmf = binomial_pmf(t, p);
    let c_us = c as usize;
    let mean = tf * p;
    let mut shortfall = Sum::default();
    if c as f64 >= mean {
        // Tp - E[(Y - c)+]
        for (k, &q) in pmf.iter().enumerate().skip(c_us + 1) {
            shortfall.add((k - c_us) as f64 * q);
        }
        Ok(mean - shortfall.value())
    } else {
        // c - E[(c - Y)+]
        for (k, &q) in pmf.iter().enumerate().take(c_us) {
            shortfall.add((c_us - k) as f64 * q);
        }
        Ok(c as f64 - shortfall.value())
    }
}

/// Memoized evaluations of `G(p, c)` for one horizon.
#[derive(Debug, Clone)]
pub struct CappedSalesCurve {
    horizon: u64,
    cache: HashMap<(u64, u64), f64>,
}

impl CappedSalesCurve {
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            cache: HashMap::new(),
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn eval(&mut self, p: f64, c: u64) -> Result<f64, PolicyError> {
        if let Some(&g) = self.cache.get(&(p.to_bits(), c)) {
            return Ok(g);
        }
        let g = capped_mean_sales(self.horizon, p, c)?;
        self.cache.insert((p.to_bits(), c), g);
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Constant targets until stock-out, `α < 1`.
    FixedTarget,
    /// Constant targets with sales capped at `c̄`, `α = 1`.
    Capped,
    /// Resolves every `⌈√T⌉` periods and after each stock-out.
    Heuristic1,
    /// Resolves only after stock-outs.
    Heuristic2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDiagnostics {
    /// Smallest `G` over the support.
    pub g_min: f64,
    /// `G(x̂_i, c_i)` per product (`G(x̂_i, c̄)` for the capped policy).
    pub g: Vec<f64>,
    /// Bisection iterations used, per product.
    pub iterations: Vec<usize>,
    /// Iteration budget `M`.
    pub iteration_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Per-period purchase-probability targets; the initial targets for
    /// the heuristics.
    pub targets: Vec<f64>,
    /// Sales cap `c̄` of the capping policy.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    pub support: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PolicyDiagnostics>,
}

impl PolicySpec {
    /// Whether `x̂_i ≤ v_i (1 - Σ x̂_j)` holds for all products, up to `tol`
    /// relative.
    pub fn is_attainable(&self, dyn_: &DynamicInstance, tol: f64) -> bool {
        attainable(&self.targets, dyn_.v(), tol)
    }
}

pub(crate) fn attainable(p: &[f64], v: &[f64], tol: f64) -> bool {
    let x0 = 1.0 - p.iter().sum::<f64>();
    p.iter()
        .zip(v)
        .all(|(&pi, &vi)| pi >= 0.0 && pi <= vi * x0 + tol * pi.max(vi * x0))
}

/// Bisection budget `⌈log₂T + log₂(1/ε₂) + log₂((1 + n v_max)/(α v_min)) + 2⌉`.
pub fn bisection_cap(dyn_: &DynamicInstance, eps2: f64) -> usize {
    let nf = dyn_.n() as f64;
    let vmax = dyn_.v().iter().cloned().fold(0.0, f64::max);
    let vmin = dyn_.v().iter().cloned().fold(f64::INFINITY, f64::min);
    let bits = (dyn_.horizon() as f64).log2()
        + (1.0 / eps2).log2()
        + ((1.0 + nf * vmax) / (dyn_.alpha() * vmin)).log2()
        + 2.0;
    bits.ceil().max(1.0) as usize
}

/// Policy for the instance: calibrated fixed targets if `α < 1`, sales
/// capping if `α = 1`.
///
/// The relaxation is solved with the approximation scheme at accuracy
/// `eps / 2`, and bisection uses `ε₂ = min{eps/2, 1 - α}`.
pub fn build_policy(dyn_: &DynamicInstance, eps: f64) -> Result<PolicySpec, PolicyError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(PolicyError::Epsilon(eps));
    }
    if (dyn_.alpha() - 1.0).abs() <= ALPHA_ONE_TOL {
        let ub = solve_upper_bound_alpha1(dyn_)?;
        return capped_policy(dyn_, &ub.xs.x);
    }
    let ub = solve_upper_bound_fptas(dyn_, eps / 2.0)?;
    let eps2 = (eps / 2.0).min(1.0 - dyn_.alpha());
    fixed_target_policy(dyn_, &ub.xs.x, eps2)
}

fn check_len(dyn_: &DynamicInstance, x: &[f64]) -> Result<(), PolicyError> {
    if x.len() != dyn_.n() {
        return Err(PolicyError::Dimension {
            got: x.len(),
            expected: dyn_.n(),
        });
    }
    Ok(())
}

/// Fixed-target policy from a relaxation solution `x_tilde`.
///
/// Products whose expected sales exceed `G_min/α` get their target lowered by
/// bisection on `[0, x̃_i]` until `G` lands in `[(1-ε₂) G_min/α, G_min/α]`.
pub fn fixed_target_policy(
    dyn_: &DynamicInstance,
    x_tilde: &[f64],
    eps2: f64,
) -> Result<PolicySpec, PolicyError> {
    check_len(dyn_, x_tilde)?;
    let support = support_of(x_tilde);
    let alpha = dyn_.alpha();
    let c = dyn_.c();
    let mut curve = CappedSalesCurve::new(dyn_.horizon());
    let mut g = vec![0.0; dyn_.n()];
    for &i in &support {
        g[i] = curve.eval(x_tilde[i], c[i])?;
    }
    let g_min = support
        .iter()
        .map(|&i| g[i])
        .fold(f64::INFINITY, f64::min);
    let hi_band = g_min / alpha;
    let lo_band = (1.0 - eps2) * hi_band;
    let cap = bisection_cap(dyn_, eps2);

    let mut targets = x_tilde.to_vec();
    let mut iterations = vec![0; dyn_.n()];
    for &i in &support {
        if g[i] <= hi_band {
            continue;
        }
        let (mut lo, mut hi) = (0.0, x_tilde[i]);
        let mut g_lo = 0.0;
        let mut it = 0;
        while it < cap && g_lo < lo_band {
            let mid = 0.5 * (lo + hi);
            let gm = curve.eval(mid, c[i])?;
            if gm > hi_band {
                hi = mid;
            } else {
                lo = mid;
                g_lo = gm;
            }
            it += 1;
        }
        if g_lo < g_min {
            return Err(PolicyError::BisectionCap {
                product: i,
                iterations: it,
            });
        }
        targets[i] = lo;
        g[i] = g_lo;
        iterations[i] = it;
    }
    Ok(PolicySpec {
        kind: PolicyKind::FixedTarget,
        targets,
        cap: None,
        support,
        diagnostics: Some(PolicyDiagnostics {
            g_min,
            g,
            iterations,
            iteration_cap: cap,
        }),
    })
}

/// Capping policy from an `α = 1` relaxation solution: every offered product
/// stops selling once it has sold `c̄ = min{c_i : x*_i > 0}` units.
pub fn capped_policy(dyn_: &DynamicInstance, x_star: &[f64]) -> Result<PolicySpec, PolicyError> {
    check_len(dyn_, x_star)?;
    let support = support_of(x_star);
    let cbar = support.iter().map(|&i| dyn_.c()[i]).min().unwrap_or(0);
    let mut curve = CappedSalesCurve::new(dyn_.horizon());
    let mut g = vec![0.0; dyn_.n()];
    for &i in &support {
        g[i] = curve.eval(x_star[i], cbar)?;
    }
    let g_min = support.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min);
    Ok(PolicySpec {
        kind: PolicyKind::Capped,
        targets: x_star.to_vec(),
        cap: Some(cbar),
        support,
        diagnostics: Some(PolicyDiagnostics {
            g_min,
            g,
            iterations: vec![0; dyn_.n()],
            iteration_cap: 0,
        }),
    })
}

/// Resolving heuristic started from the relaxation solution `x_star`.
pub fn heuristic_policy(
    dyn_: &DynamicInstance,
    x_star: &[f64],
    kind: PolicyKind,
) -> Result<PolicySpec, PolicyError> {
    check_len(dyn_, x_star)?;
    assert!(matches!(kind, PolicyKind::Heuristic1 | PolicyKind::Heuristic2));
    Ok(PolicySpec {
        kind,
        targets: x_star.to_vec(),
        cap: None,
        support: support_of(x_star),
        diagnostics: None,
    })
}

/// Purchase probabilities of a fixed-target or capping policy given the
/// current stock.
///
/// A product is available while it has stock (fixed targets) or has sold
/// fewer than `c̄` units (capping). Heuristic specs return their initial
/// targets masked the same way; their resolving lives in [`PolicyRunner`].
pub fn policy_step(spec: &PolicySpec, remaining: &[u64], sold: &[u64], _t: u64) -> Vec<f64> {
    spec.targets
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let available = match spec.cap {
                Some(cbar) => sold[i] < cbar && remaining[i] > 0,
                None => remaining[i] > 0,
            };
            if available {
                x
            } else {
                0.0
            }
        })
        .collect()
}

/// Targets for period `t` from the history-aware LP.
///
/// `cum` holds the summed targets of periods `1..t`, `sold` the realized
/// sales so far. Maximizes `Σ r_i x_i` over the support subject to the MNL
/// constraints, `cum_i + R x_i ≥ α (cum_j + R x_j)` for all pairs and
/// `R x_i ≤ c_i - sold_i`, where `R = T - t + 1`. At `t = 1` the relaxation
/// solution `x_star` is returned unchanged.
#[allow(clippy::too_many_arguments)]
pub fn heuristic_resolve(
    dyn_: &DynamicInstance,
    support: &[usize],
    x_star: &[f64],
    cum: &[f64],
    sold: &[u64],
    t: u64,
    encoding: BalanceEncoding,
    simplex: &mut Simplex,
) -> Result<Vec<f64>, PolicyError> {
    if t <= 1 {
        return Ok(x_star.to_vec());
    }
    let k = support.len();
    let (r, v, alpha) = (dyn_.r(), dyn_.v(), dyn_.alpha());
    let rem = (dyn_.horizon() - t + 1) as f64;
    let aux = encoding == BalanceEncoding::Auxiliary;
    let nv = k + 1 + usize::from(aux);
    let x0 = k;
    let mut obj = vec![0.0; nv];
    for (a, &i) in support.iter().enumerate() {
        obj[a] = r[i];
    }
    let mut lp = LinearProgram::new(nv).maximize(obj);
    let mut row = vec![1.0; k + 1];
    row.resize(nv, 0.0);
    lp.add_row(row, Sense::Eq, 1.0);
    for (a, &i) in support.iter().enumerate() {
        lp.add_sparse_row(&[(a, 1.0), (x0, -v[i])], Sense::Le, 0.0);
        let left = dyn_.c()[i].saturating_sub(sold[i]) as f64;
        lp.set_bounds(a, 0.0, left / rem);
    }
    if aux {
        let y = k + 1;
        for (a, &i) in support.iter().enumerate() {
            lp.add_sparse_row(&[(a, rem), (y, -1.0)], Sense::Le, -cum[i]);
            lp.add_sparse_row(&[(a, rem), (y, -alpha)], Sense::Ge, -cum[i]);
        }
    } else {
        for (a, &i) in support.iter().enumerate() {
            for (b, &j) in support.iter().enumerate() {
                if a != b {
                    lp.add_sparse_row(
                        &[(a, rem), (b, -alpha * rem)],
                        Sense::Ge,
                        alpha * cum[j] - cum[i],
                    );
                }
            }
        }
    }
    let sol = simplex.solve(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(PolicyError::Resolve {
            period: t,
            status: sol.status,
        });
    }
    let mut x = vec![0.0; dyn_.n()];
    for (a, &i) in support.iter().enumerate() {
        x[i] = sol.x[a].max(0.0);
    }
    Ok(x)
}

/// Per-trajectory execution state of a policy.
pub struct PolicyRunner<'a> {
    dyn_: &'a DynamicInstance,
    spec: &'a PolicySpec,
    every: Option<u64>,
    current: Vec<f64>,
    cum: Vec<f64>,
    simplex: Simplex,
    resolves: usize,
}

impl<'a> PolicyRunner<'a> {
    pub fn new(dyn_: &'a DynamicInstance, spec: &'a PolicySpec) -> Self {
        let every = match spec.kind {
            PolicyKind::Heuristic1 => Some((dyn_.horizon() as f64).sqrt().ceil() as u64),
            _ => None,
        };
        Self {
            dyn_,
            spec,
            every,
            current: spec.targets.clone(),
            cum: vec![0.0; dyn_.n()],
            simplex: Simplex::default(),
            resolves: 0,
        }
    }

    /// Clears the history for a new trajectory.
    pub fn reset(&mut self) {
        self.current.copy_from_slice(&self.spec.targets);
        self.cum.iter_mut().for_each(|c| *c = 0.0);
        self.resolves = 0;
    }

    /// Number of LP resolves in the current trajectory.
    pub fn resolves(&self) -> usize {
        self.resolves
    }

    /// Purchase probabilities for period `t`. `stockout` reports whether
    /// some product ran out during period `t - 1`.
    pub fn probabilities(
        &mut self,
        t: u64,
        remaining: &[u64],
        sold: &[u64],
        stockout: bool,
    ) -> Result<Vec<f64>, PolicyError> {
        match self.spec.kind {
            PolicyKind::FixedTarget | PolicyKind::Capped => {
                Ok(policy_step(self.spec, remaining, sold, t))
            }
            PolicyKind::Heuristic1 | PolicyKind::Heuristic2 => {
                let scheduled = self.every.is_some_and(|k| t > 1 && t % k == 0);
                if t > 1 && (stockout || scheduled) {
                    self.current = heuristic_resolve(
                        self.dyn_,
                        &self.spec.support,
                        &self.spec.targets,
                        &self.cum,
                        sold,
                        t,
                        BalanceEncoding::Auxiliary,
                        &mut self.simplex,
                    )?;
                    self.resolves += 1;
                }
                for (c, x) in self.cum.iter_mut().zip(&self.current) {
                    *c += x;
                }
                self.check_balance(t)?;
                Ok(self
                    .current
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if remaining[i] > 0 { x } else { 0.0 })
                    .collect())
            }
        }
    }

    fn check_balance(&self, t: u64) -> Result<(), PolicyError> {
        let s = &self.spec.support;
        let Some(&high) = s.iter().max_by(|&&a, &&b| self.cum[a].total_cmp(&self.cum[b])) else {
            return Ok(());
        };
        let top = self.cum[high];
        let tol = 1e-7 * top.max(1.0);
        for &low in s {
            if self.cum[low] < self.dyn_.alpha() * top - tol {
                return Err(PolicyError::Balancing {
                    period: t,
                    low,
                    high,
                });
            }
        }
        Ok(())
    }
}
