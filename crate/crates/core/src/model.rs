//! Instances, MNL choice probabilities, sales vectors and their realization
//! as distributions over nested assortments.
//!
//! Products are indexed from zero. An assortment is a slice of distinct
//! product indices; order does not matter.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance used by feasibility checks.
pub const FEAS_TOL: f64 = 1e-9;

/// Probabilities below this are dropped from an [`AssortmentDistribution`].
pub const PRUNE_PROB: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("instance has no products")]
    Empty,
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{what}[{index}] = {value} must be finite and positive")]
    NonPositive {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("alpha = {0} must lie in (0, 1]")]
    Alpha(f64),
    #[error("horizon T must be at least 1")]
    Horizon,
    #[error("inventory c[{0}] must be at least 1")]
    Inventory(usize),
    #[error("product index {index} out of range for {n} products")]
    Index { index: usize, n: usize },
    #[error("sales vector infeasible: {0}")]
    Infeasible(FeasibilityReport),
}

/// A static instance: revenues `r`, MNL weights `v` and balancing level `alpha`.
///
/// The no-purchase option has weight 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    r: Vec<f64>,
    v: Vec<f64>,
    alpha: f64,
}

#[derive(Deserialize)]
struct RawInstance {
    r: Vec<f64>,
    v: Vec<f64>,
    alpha: f64,
}

impl TryFrom<RawInstance> for Instance {
    type Error = ModelError;
    fn try_from(raw: RawInstance) -> Result<Self, ModelError> {
        Instance::new(raw.r, raw.v, raw.alpha)
    }
}

fn check_positive(what: &'static str, xs: &[f64]) -> Result<(), ModelError> {
    for (index, &value) in xs.iter().enumerate() {
        if !(value.is_finite() && value > 0.0) {
            return Err(ModelError::NonPositive { what, index, value });
        }
    }
    Ok(())
}

impl Instance {
    pub fn new(r: Vec<f64>, v: Vec<f64>, alpha: f64) -> Result<Self, ModelError> {
        if r.is_empty() {
            return Err(ModelError::Empty);
        }
        if v.len() != r.len() {
            return Err(ModelError::LengthMismatch {
                what: "v",
                got: v.len(),
                expected: r.len(),
            });
        }
        check_positive("r", &r)?;
        check_positive("v", &v)?;
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ModelError::Alpha(alpha));
        }
        Ok(Self { r, v, alpha })
    }

    pub fn n(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Same products with a different balancing level.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ModelError> {
        Self::new(self.r.clone(), self.v.clone(), alpha)
    }

    fn check_set(&self, set: &[usize]) -> Result<(), ModelError> {
        match set.iter().find(|&&i| i >= self.n()) {
            Some(&index) => Err(ModelError::Index { index, n: self.n() }),
            None => Ok(()),
        }
    }

    /// MNL choice probability of `choice` when `set` is offered.
    pub fn choice_prob(&self, set: &[usize], choice: Choice) -> Result<f64, ModelError> {
        self.check_set(set)?;
        let denom = 1.0 + set.iter().map(|&j| self.v[j]).sum::<f64>();
        Ok(match choice {
            Choice::NoPurchase => 1.0 / denom,
            Choice::Product(i) if i >= self.n() => {
                return Err(ModelError::Index { index: i, n: self.n() })
            }
            Choice::Product(i) if set.contains(&i) => self.v[i] / denom,
            Choice::Product(_) => 0.0,
        })
    }

    /// Expected revenue `Σ r_i v_i / (1 + Σ v_i)` of offering `set`.
    pub fn expected_revenue(&self, set: &[usize]) -> Result<f64, ModelError> {
        self.check_set(set)?;
        Ok(mnl_revenue(&self.r, &self.v, set))
    }
}

/// An alternative a customer may pick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    NoPurchase,
    Product(usize),
}

/// `Σ r_i w_i / (1 + Σ w_i)` over `set` for arbitrary weights `w`.
pub fn mnl_revenue(r: &[f64], w: &[f64], set: &[usize]) -> f64 {
    let (num, den) = set
        .iter()
        .fold((0.0, 1.0), |(a, b), &i| (a + r[i] * w[i], b + w[i]));
    num / den
}

/// Best revenue-ordered prefix of `allowed` under weights `w`.
///
/// Exact for unconstrained MNL assortment optimization. Ties in revenue are
/// broken by product index, ties in objective by the shorter prefix.
pub fn revenue_ordered_optimum(r: &[f64], w: &[f64], allowed: &[usize]) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = allowed.to_vec();
    order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    let (mut num, mut den) = (0.0, 1.0);
    let (mut best_k, mut best) = (0, 0.0);
    for (k, &i) in order.iter().enumerate() {
        num += r[i] * w[i];
        den += w[i];
        if num / den > best {
            best = num / den;
            best_k = k + 1;
        }
    }
    let mut set = order[..best_k].to_vec();
    set.sort_unstable();
    (set, best)
}

/// A static instance extended with a horizon and initial inventories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDynamic", into = "RawDynamic")]
pub struct DynamicInstance {
    base: Instance,
    horizon: u64,
    c: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawDynamic {
    r: Vec<f64>,
    v: Vec<f64>,
    alpha: f64,
    #[serde(rename = "T")]
    horizon: u64,
    c: Vec<u64>,
}

impl TryFrom<RawDynamic> for DynamicInstance {
    type Error = ModelError;
    fn try_from(raw: RawDynamic) -> Result<Self, ModelError> {
        DynamicInstance::new(Instance::new(raw.r, raw.v, raw.alpha)?, raw.horizon, raw.c)
    }
}

impl From<DynamicInstance> for RawDynamic {
    fn from(d: DynamicInstance) -> Self {
        RawDynamic {
            r: d.base.r,
            v: d.base.v,
            alpha: d.base.alpha,
            horizon: d.horizon,
            c: d.c,
        }
    }
}

impl DynamicInstance {
    pub fn new(base: Instance, horizon: u64, c: Vec<u64>) -> Result<Self, ModelError> {
        if horizon == 0 {
            return Err(ModelError::Horizon);
        }
        if c.len() != base.n() {
            return Err(ModelError::LengthMismatch {
                what: "c",
                got: c.len(),
                expected: base.n(),
            });
        }
        if let Some(i) = c.iter().position(|&ci| ci == 0) {
            return Err(ModelError::Inventory(i));
        }
        Ok(Self { base, horizon, c })
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn n(&self) -> usize {
        self.base.n()
    }

    pub fn r(&self) -> &[f64] {
        self.base.r()
    }

    pub fn v(&self) -> &[f64] {
        self.base.v()
    }

    pub fn alpha(&self) -> f64 {
        self.base.alpha()
    }

    /// Number of periods `T`.
    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn c(&self) -> &[u64] {
        &self.c
    }

    /// Per-period sales cap `c_i / T`.
    pub fn sales_cap(&self, i: usize) -> f64 {
        self.c[i] as f64 / self.horizon as f64
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, ModelError> {
        Self::new(self.base.with_alpha(alpha)?, self.horizon, self.c.clone())
    }
}

/// Purchase probabilities `x_i` together with the no-purchase probability `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalesVector {
    pub x0: f64,
    pub x: Vec<f64>,
}

impl SalesVector {
    /// Builds the vector with `x0 = 1 - Σ x_i`.
    pub fn from_purchases(x: Vec<f64>) -> Self {
        let x0 = 1.0 - x.iter().sum::<f64>();
        Self { x0, x }
    }

    /// Purchase probabilities induced by offering `set` with weights `w`.
    pub fn from_weights(w: &[f64], set: &[usize]) -> Self {
        let den = 1.0 + set.iter().map(|&i| w[i]).sum::<f64>();
        let mut x = vec![0.0; w.len()];
        for &i in set {
            x[i] = w[i] / den;
        }
        Self { x0: 1.0 / den, x }
    }

    pub fn revenue(&self, r: &[f64]) -> f64 {
        self.x.iter().zip(r).map(|(x, r)| x * r).sum()
    }

    /// Indices with positive purchase probability.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.x)
    }
}

pub(crate) fn support_of(x: &[f64]) -> Vec<usize> {
    (0..x.len()).filter(|&i| x[i] > 0.0).collect()
}

/// Constraint families of the sales-based formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `x0 + Σ x_i = 1`.
    Simplex,
    /// `x_i ≥ 0` and `x0 > 0`.
    Nonnegative,
    /// `x_i ≤ v_i x0`.
    MnlValidity,
    /// `x_i = 0` or `x_i ≥ α max_j x_j`.
    Balancing,
    /// `x_i ≤ c_i / T` in the fluid relaxation.
    Inventory,
    /// Wrong number of entries.
    Dimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub index: Option<usize>,
    /// Amount by which the constraint is violated.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, constraint: ConstraintKind, index: Option<usize>, magnitude: f64) {
        self.violations.push(Violation {
            constraint,
            index,
            magnitude,
        });
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "feasible");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{:?}", v.constraint)?;
            if let Some(i) = v.index {
                write!(f, "[{i}]")?;
            }
            write!(f, " by {:.3e}", v.magnitude)?;
        }
        Ok(())
    }
}

/// Checks the sales-based constraints. `tol` is relative to the magnitude of
/// the two sides of each constraint.
pub fn check_bms_feasible(inst: &Instance, xs: &SalesVector, tol: f64) -> FeasibilityReport {
    check_sales(inst, xs, tol, true)
}

/// Same as [`check_bms_feasible`] but skips the balancing family.
pub fn check_mnl_feasible(inst: &Instance, xs: &SalesVector, tol: f64) -> FeasibilityReport {
    check_sales(inst, xs, tol, false)
}

fn check_sales(inst: &Instance, xs: &SalesVector, tol: f64, balancing: bool) -> FeasibilityReport {
    let mut rep = FeasibilityReport::default();
    if xs.x.len() != inst.n() {
        rep.push(
            ConstraintKind::Dimension,
            None,
            (xs.x.len() as f64 - inst.n() as f64).abs(),
        );
        return rep;
    }
    let total = xs.x0 + xs.x.iter().sum::<f64>();
    if (total - 1.0).abs() > tol {
        rep.push(ConstraintKind::Simplex, None, (total - 1.0).abs());
    }
    if xs.x0 <= 0.0 {
        rep.push(ConstraintKind::Nonnegative, None, -xs.x0);
    }
    let xmax = xs.x.iter().cloned().fold(0.0, f64::max);
    for (i, &xi) in xs.x.iter().enumerate() {
        if xi < -tol * xmax.max(f64::MIN_POSITIVE) {
            rep.push(ConstraintKind::Nonnegative, Some(i), -xi);
        }
        let cap = inst.v[i] * xs.x0;
        if xi - cap > tol * xi.abs().max(cap.abs()) {
            rep.push(ConstraintKind::MnlValidity, Some(i), xi - cap);
        }
        if balancing && xi > 0.0 {
            let floor = inst.alpha * xmax;
            if floor - xi > tol * floor {
                rep.push(ConstraintKind::Balancing, Some(i), floor - xi);
            }
        }
    }
    rep
}

/// One assortment and the probability of offering it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Offer {
    pub assortment: Vec<usize>,
    pub probability: f64,
}

/// Probability mass over a nested chain of assortments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssortmentDistribution {
    pub entries: Vec<Offer>,
}

impl AssortmentDistribution {
    /// Purchase probability of each product when a customer first draws an
    /// assortment and then chooses under MNL.
    pub fn purchase_probabilities(&self, inst: &Instance) -> Vec<f64> {
        let mut x = vec![0.0; inst.n()];
        for e in &self.entries {
            let den = 1.0 + e.assortment.iter().map(|&j| inst.v[j]).sum::<f64>();
            for &i in &e.assortment {
                x[i] += e.probability * inst.v[i] / den;
            }
        }
        x
    }

    /// True when every assortment contains the previous one.
    pub fn is_nested(&self) -> bool {
        self.entries.windows(2).all(|w| {
            w[0].assortment.len() < w[1].assortment.len()
                && w[0].assortment.iter().all(|i| w[1].assortment.contains(i))
        })
    }

    /// Draws one assortment.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &[usize] {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for e in &self.entries {
            acc += e.probability;
            if u < acc {
                return &e.assortment;
            }
        }
        self.entries
            .last()
            .map(|e| e.assortment.as_slice())
            .unwrap_or(&[])
    }
}

/// Realizes a sales vector as a distribution over nested assortments.
///
/// Products are ranked by `x_i / v_i` (ties by index). With `S_k` the top-`k`
/// prefix, `S_k` is offered with probability
/// `(x_k/v_k - x_{k+1}/v_{k+1}) (1 + Σ_{j∈S_k} v_j)`, where the ratio for
/// `k = 0` is `x0` and the ratio past the last product is 0.
pub fn sales_to_distribution(
    inst: &Instance,
    xs: &SalesVector,
) -> Result<AssortmentDistribution, ModelError> {
    let rep = check_mnl_feasible(inst, xs, FEAS_TOL);
    if !rep.is_feasible() {
        return Err(ModelError::Infeasible(rep));
    }
    let n = inst.n();
    let ratio = |i: usize| xs.x[i].max(0.0) / inst.v[i];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));

    let mut entries = Vec::new();
    let mut prev = xs.x0;
    let mut weight = 1.0;
    let mut prefix: Vec<usize> = Vec::new();
    for k in 0..=n {
        let next = if k < n { ratio(order[k]) } else { 0.0 };
        let q = ((prev - next) * weight).max(0.0);
        if q >= PRUNE_PROB {
            let mut assortment = prefix.clone();
            assortment.sort_unstable();
            entries.push(Offer {
                assortment,
                probability: q,
            });
        }
        if k < n {
            prefix.push(order[k]);
            weight += inst.v[order[k]];
            prev = next;
        }
    }
    let total: f64 = entries.iter().map(|e| e.probability).sum();
    for e in &mut entries {
        e.probability /= total;
    }
    Ok(AssortmentDistribution { entries })
}
