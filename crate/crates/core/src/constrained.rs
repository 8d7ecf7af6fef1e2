//! Balanced assortment optimization when offered sets must belong to a
//! family `𝒳`, reduced to repeated calls of an MNL oracle for `𝒳`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{mnl_revenue, revenue_ordered_optimum, Instance, SalesVector};
use crate::static_solver::{distinct_sorted, prefer};

/// Default cap on the number of products for exhaustive oracles.
pub const BRUTE_FORCE_N_MAX: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("brute-force oracle limited to {n_max} products, got {n}")]
    TooLarge { n: usize, n_max: usize },
    #[error("oracle failed at thresholds r = {r_hat}, v = {v_hat}: {source}")]
    AtCandidate {
        r_hat: f64,
        v_hat: f64,
        source: Box<OracleError>,
    },
    #[error("invalid constraint family: {0}")]
    InvalidFamily(String),
    #[error("{0}")]
    Other(String),
}

/// Approximate optimizer for MNL assortment problems over a family `𝒳`.
pub trait ConstraintOracle {
    /// Approximation guarantee in `(0, 1]`.
    fn beta(&self) -> f64;

    /// Whether concurrent calls on one oracle are allowed.
    fn reentrant(&self) -> bool {
        false
    }

    /// A set `S ⊆ allowed` in `𝒳` maximizing, up to `β`,
    /// `Σ_S r_i w_i / (1 + Σ_S w_i)`; `None` if no subset of `allowed` is in `𝒳`.
    /// `r` and `w` are indexed by product over the full universe.
    fn solve(&self, allowed: &[usize], r: &[f64], w: &[f64])
        -> Result<Option<Vec<usize>>, OracleError>;

    /// Membership test for `𝒳`, if the oracle knows it.
    fn admits(&self, _set: &[usize]) -> Option<bool> {
        None
    }
}

/// Every subset allowed; exact by scanning revenue-ordered prefixes.
#[derive(Debug, Clone, Copy, Default)]
pub struct Unconstrained;

pub fn oracle_unconstrained() -> Unconstrained {
    Unconstrained
}

impl ConstraintOracle for Unconstrained {
    fn beta(&self) -> f64 {
        1.0
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn solve(
        &self,
        allowed: &[usize],
        r: &[f64],
        w: &[f64],
    ) -> Result<Option<Vec<usize>>, OracleError> {
        Ok(Some(revenue_ordered_optimum(r, w, allowed).0))
    }

    fn admits(&self, _set: &[usize]) -> Option<bool> {
        Some(true)
    }
}

type Predicate = Box<dyn Fn(&[usize]) -> bool + Send + Sync>;

/// Exact oracle that enumerates every subset passing a predicate.
pub struct BruteForce {
    predicate: Predicate,
    n_max: usize,
}

pub fn oracle_bruteforce<F>(predicate: F, n_max: usize) -> BruteForce
where
    F: Fn(&[usize]) -> bool + Send + Sync + 'static,
{
    BruteForce {
        predicate: Box::new(predicate),
        n_max,
    }
}

impl ConstraintOracle for BruteForce {
    fn beta(&self) -> f64 {
        1.0
    }

    fn reentrant(&self) -> bool {
        true
    }

    fn solve(
        &self,
        allowed: &[usize],
        r: &[f64],
        w: &[f64],
    ) -> Result<Option<Vec<usize>>, OracleError> {
        if w.len() > self.n_max {
            return Err(OracleError::TooLarge {
                n: w.len(),
                n_max: self.n_max,
            });
        }
        let m = allowed.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut set = Vec::with_capacity(m);
        for mask in 0u64..(1u64 << m) {
            set.clear();
            set.extend((0..m).filter(|b| mask >> b & 1 == 1).map(|b| allowed[b]));
            set.sort_unstable();
            if !(self.predicate)(&set) {
                continue;
            }
            let rev = mnl_revenue(r, w, &set);
            let better = match &best {
                None => true,
                Some((b, s)) => prefer(rev, &set, *b, s),
            };
            if better {
                best = Some((rev, set.clone()));
            }
        }
        Ok(best.map(|(_, s)| s))
    }

    fn admits(&self, set: &[usize]) -> Option<bool> {
        Some((self.predicate)(set))
    }
}

/// A group of products of which at least `min_count` must be offered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub ids: Vec<usize>,
    pub min_count: usize,
}

/// Constraint families accepted on the command line and in JSON:
/// `"all"`, `{"max_card": k}`, `{"min_card": k}` or
/// `{"categories": [{"ids": [...], "min_count": k}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub enum ConstraintFamily {
    All,
    MaxCard(usize),
    MinCard(usize),
    Categories(Vec<Category>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum FamilyRepr {
    Name(String),
    MaxCard { max_card: usize },
    MinCard { min_card: usize },
    Categories { categories: Vec<Category> },
}

impl TryFrom<FamilyRepr> for ConstraintFamily {
    type Error = String;
    fn try_from(f: FamilyRepr) -> Result<Self, String> {
        Ok(match f {
            FamilyRepr::Name(s) if s == "all" => ConstraintFamily::All,
            FamilyRepr::Name(s) => return Err(format!("unknown constraint family {s:?}")),
            FamilyRepr::MaxCard { max_card } => ConstraintFamily::MaxCard(max_card),
            FamilyRepr::MinCard { min_card } => ConstraintFamily::MinCard(min_card),
            FamilyRepr::Categories { categories } => ConstraintFamily::Categories(categories),
        })
    }
}

impl From<ConstraintFamily> for FamilyRepr {
    fn from(f: ConstraintFamily) -> Self {
        match f {
            ConstraintFamily::All => FamilyRepr::Name("all".into()),
            ConstraintFamily::MaxCard(k) => FamilyRepr::MaxCard { max_card: k },
            ConstraintFamily::MinCard(k) => FamilyRepr::MinCard { min_card: k },
            ConstraintFamily::Categories(c) => FamilyRepr::Categories { categories: c },
        }
    }
}

impl ConstraintFamily {
    pub fn admits(&self, set: &[usize]) -> bool {
        match self {
            ConstraintFamily::All => true,
            ConstraintFamily::MaxCard(k) => set.len() <= *k,
            ConstraintFamily::MinCard(k) => set.len() >= *k,
            ConstraintFamily::Categories(cats) => cats
                .iter()
                .all(|c| c.ids.iter().filter(|i| set.contains(i)).count() >= c.min_count),
        }
    }

    /// Rejects category ids outside `0..n`.
    pub fn validate(&self, n: usize) -> Result<(), OracleError> {
        if let ConstraintFamily::Categories(cats) = self {
            if let Some(&i) = cats.iter().flat_map(|c| &c.ids).find(|&&i| i >= n) {
                return Err(OracleError::InvalidFamily(format!(
                    "category id {i} out of range for {n} products"
                )));
            }
        }
        Ok(())
    }

    /// Exact oracle for the family.
    pub fn oracle(&self, n_max: usize) -> Box<dyn ConstraintOracle + Send + Sync> {
        match self {
            ConstraintFamily::All => Box::new(Unconstrained),
            other => {
                let fam = other.clone();
                Box::new(oracle_bruteforce(move |s| fam.admits(s), n_max))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedSolution {
    pub xs: SalesVector,
    pub revenue: f64,
    pub r_hat: f64,
    pub v_hat: f64,
    pub support: Vec<usize>,
    /// False when every oracle call reported infeasibility.
    pub feasible: bool,
    /// Distinct oracle calls made.
    pub oracle_calls: usize,
}

/// Weights seen by the oracle for thresholds `(r̂, v̂)`: products below `r̂`
/// are shrunk to `v̂`, the rest capped at `v̂/α`.
pub fn transformed_weights(inst: &Instance, r_hat: f64, v_hat: f64) -> Vec<f64> {
    let alpha = inst.alpha();
    inst.r()
        .iter()
        .zip(inst.v())
        .map(|(&ri, &vi)| if ri < r_hat { v_hat } else { vi.min(v_hat / alpha) })
        .collect()
}

/// Balanced assortment optimization over a constrained family.
///
/// With a `β`-approximate oracle the revenue is at least `β` times optimal.
pub fn solve_bms_constrained<O>(
    inst: &Instance,
    oracle: &O,
) -> Result<ConstrainedSolution, OracleError>
where
    O: ConstraintOracle + Sync + ?Sized,
{
    let (r, v, alpha) = (inst.r(), inst.v(), inst.alpha());
    let r_vals = distinct_sorted(r);
    let v_vals = distinct_sorted(&v.iter().flat_map(|&x| [x, alpha * x]).collect::<Vec<_>>());

    struct Candidate {
        r_hat: f64,
        v_hat: f64,
        w: Vec<f64>,
        key: usize,
    }
    let mut keys: HashMap<(Vec<usize>, Vec<u64>), usize> = HashMap::new();
    let mut calls: Vec<Vec<usize>> = Vec::new();
    let mut call_w: Vec<Vec<f64>> = Vec::new();
    let mut cands = Vec::new();
    for &v_hat in &v_vals {
        let allowed: Vec<usize> = (0..inst.n()).filter(|&i| v[i] >= v_hat).collect();
        if allowed.is_empty() {
            continue;
        }
        for &r_hat in &r_vals {
            let w = transformed_weights(inst, r_hat, v_hat);
            let sig = allowed.iter().map(|&i| w[i].to_bits()).collect();
            let next = calls.len();
            let key = *keys.entry((allowed.clone(), sig)).or_insert(next);
            if key == next {
                calls.push(allowed.clone());
                call_w.push(w.clone());
            }
            cands.push(Candidate {
                r_hat,
                v_hat,
                w,
                key,
            });
        }
    }

    let run = |k: usize| oracle.solve(&calls[k], r, &call_w[k]);
    let answers: Vec<Result<Option<Vec<usize>>, OracleError>> = if oracle.reentrant() {
        (0..calls.len()).into_par_iter().map(run).collect()
    } else {
        (0..calls.len()).map(run).collect()
    };

    let mut best = ConstrainedSolution {
        xs: SalesVector::from_purchases(vec![0.0; inst.n()]),
        revenue: 0.0,
        r_hat: r_vals[0],
        v_hat: v_vals[0],
        support: Vec::new(),
        feasible: false,
        oracle_calls: calls.len(),
    };
    let mut have = false;
    for c in &cands {
        let set = match &answers[c.key] {
            Ok(Some(s)) => s,
            Ok(None) => continue,
            Err(e) => {
                return Err(OracleError::AtCandidate {
                    r_hat: c.r_hat,
                    v_hat: c.v_hat,
                    source: Box::new(e.clone()),
                })
            }
        };
        best.feasible = true;
        let rev = mnl_revenue(r, &c.w, set);
        if !have || prefer(rev, set, best.revenue, &best.support) {
            have = true;
            let mut support = set.clone();
            support.sort_unstable();
            best.xs = SalesVector::from_weights(&c.w, &support);
            best.revenue = rev;
            best.r_hat = c.r_hat;
            best.v_hat = c.v_hat;
            best.support = support;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_bms_feasible, FEAS_TOL};
    use crate::static_solver::solve_bms;

    #[test]
    fn unconstrained_oracle_prefix_scan() {
        let o = oracle_unconstrained();
        let s = o.solve(&[0, 1, 2], &[3.0, 2.0, 1.0], &[1.0, 1.0, 1.0]).unwrap().unwrap();
        assert_eq!(s, vec![0, 1]);
        assert_eq!(o.solve(&[], &[3.0], &[1.0]).unwrap(), Some(vec![]));
        assert_eq!(o.solve(&[0], &[3.0], &[1.0]).unwrap(), Some(vec![0]));
    }

    #[test]
    fn brute_force_edge_cases() {
        let empty_only = oracle_bruteforce(|s: &[usize]| s.is_empty(), 16);
        assert_eq!(empty_only.solve(&[0, 1], &[1.0, 1.0], &[1.0, 1.0]).unwrap(), Some(vec![]));
        let single = oracle_bruteforce(|s: &[usize]| s == [1], 16);
        assert_eq!(single.solve(&[0, 1], &[5.0, 1.0], &[1.0, 1.0]).unwrap(), Some(vec![1]));
        let none = oracle_bruteforce(|_: &[usize]| false, 16);
        assert_eq!(none.solve(&[0], &[1.0], &[1.0]).unwrap(), None);
        let small = oracle_bruteforce(|_: &[usize]| true, 2);
        assert!(matches!(
            small.solve(&[0], &[1.0; 3], &[1.0; 3]),
            Err(OracleError::TooLarge { n: 3, n_max: 2 })
        ));
    }

    #[test]
    fn all_family_matches_static_solver() {
        let inst =
            Instance::new(vec![9.0, 4.0, 3.0, 2.5], vec![0.2, 1.0, 1.5, 3.0], 0.4).unwrap();
        let c = solve_bms_constrained(&inst, &oracle_unconstrained()).unwrap();
        let s = solve_bms(&inst);
        assert!((c.revenue - s.revenue).abs() < 1e-12);
        assert!(check_bms_feasible(&inst, &c.xs, FEAS_TOL).is_feasible());
    }

    #[test]
    fn cardinality_one_is_best_singleton() {
        let inst = Instance::new(vec![9.0, 4.0, 3.0], vec![0.2, 1.0, 1.5], 0.6).unwrap();
        let oracle = ConstraintFamily::MaxCard(1).oracle(16);
        let c = solve_bms_constrained(&inst, oracle.as_ref()).unwrap();
        let best = (0..3)
            .map(|i| inst.r()[i] * inst.v()[i] / (1.0 + inst.v()[i]))
            .fold(0.0, f64::max);
        assert!((c.revenue - best).abs() < 1e-12);
        assert_eq!(c.support.len(), 1);
    }

    #[test]
    fn infeasible_family_gives_empty_solution() {
        let inst = Instance::new(vec![1.0, 2.0], vec![1.0, 1.0], 0.5).unwrap();
        let oracle = ConstraintFamily::MinCard(3).oracle(16);
        let c = solve_bms_constrained(&inst, oracle.as_ref()).unwrap();
        assert!(!c.feasible);
        assert_eq!(c.revenue, 0.0);
        assert!(c.support.is_empty());
    }

    #[test]
    fn family_json_forms() {
        let all: ConstraintFamily = serde_json::from_str(r#""all""#).unwrap();
        assert_eq!(all, ConstraintFamily::All);
        let k: ConstraintFamily = serde_json::from_str(r#"{"max_card":2}"#).unwrap();
        assert_eq!(k, ConstraintFamily::MaxCard(2));
        let k: ConstraintFamily = serde_json::from_str(r#"{"min_card":3}"#).unwrap();
        assert_eq!(k, ConstraintFamily::MinCard(3));
        let c: ConstraintFamily =
            serde_json::from_str(r#"{"categories":[{"ids":[0,2],"min_count":1}]}"#).unwrap();
        assert!(c.admits(&[2]) && !c.admits(&[1]));
        assert!(c.validate(2).is_err() && c.validate(3).is_ok());
        assert!(serde_json::from_str::<ConstraintFamily>(r#""some""#).is_err());
        assert_eq!(serde_json::to_string(&k).unwrap(), r#"{"min_card":3}"#);
    }

    #[test]
    fn transformed_weights_stay_in_band() {
        let inst = Instance::new(vec![3.0, 1.0, 2.0], vec![0.5, 4.0, 2.0], 0.25).unwrap();
        let w = transformed_weights(&inst, 2.0, 0.5);
        for &wi in &w {
            assert!(wi >= 0.5 && wi <= 0.5 / 0.25);
        }
        assert_eq!(w[1], 0.5);
    }
}
