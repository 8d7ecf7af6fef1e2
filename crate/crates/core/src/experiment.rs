//! Comparison of the fixed-target policy against the two resolving
//! heuristics over a grid of generated instances.
//!
//! Every `(T, p0, γ)` combination gets its own instance seed, so rows that
//! differ only in `α` share product data. All three policies in a cell are
//! simulated on the same random streams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance_gen::{generate, GenConfig, GenError};
use crate::policy::{
    capped_policy, fixed_target_policy, heuristic_policy, PolicyError, PolicyKind, ALPHA_ONE_TOL,
};
use crate::simulate::{audit_balancing, simulate, SamplingMode, SimError, SimulationConfig};
use crate::upper_bound::{
    solve_upper_bound_alpha1, solve_upper_bound_exact, solve_upper_bound_fptas, Method,
    UpperBoundError, UpperBoundSolution,
};

/// Grid and simulation settings. Missing fields in a JSON config take their
/// [`ExperimentConfig::desk`] values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(alias = "T")]
    pub horizons: Vec<u64>,
    #[serde(alias = "P0", alias = "p0")]
    pub p0s: Vec<f64>,
    #[serde(alias = "gamma")]
    pub gammas: Vec<f64>,
    #[serde(alias = "alpha")]
    pub alphas: Vec<f64>,
    pub replicates: u64,
    pub seed: u64,
    /// Accuracy of the approximation scheme when `n > exact_n_max`.
    pub eps: f64,
    /// Largest `n` solved by support enumeration.
    pub exact_n_max: usize,
    /// Bisection tolerance is `min{eps2, 1 - α}`.
    pub eps2: f64,
    pub mode: SamplingMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl ExperimentConfig {
    /// Ten products, `T ∈ {200, 400, 800}`, 200 replicates.
    pub fn desk() -> Self {
        Self {
            n: 10,
            horizons: vec![200, 400, 800],
            p0s: vec![0.1, 0.3],
            gammas: vec![0.6, 0.8],
            alphas: vec![0.25, 0.5, 0.75],
            replicates: 200,
            seed: 2024,
            eps: 0.05,
            exact_n_max: 12,
            eps2: 1e-3,
            mode: SamplingMode::Direct,
        }
    }

    /// Forty products, `T ∈ {2000, 4000, 8000, 16000}`, 400 replicates.
    pub fn paper() -> Self {
        Self {
            n: 40,
            horizons: vec![2000, 4000, 8000, 16000],
            replicates: 400,
            ..Self::desk()
        }
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        let mut instance = 0;
        for &horizon in &self.horizons {
            for &p0 in &self.p0s {
                for &gamma in &self.gammas {
                    for &alpha in &self.alphas {
                        out.push(Cell {
                            horizon,
                            p0,
                            gamma,
                            alpha,
                            seed: self.seed.wrapping_add(instance),
                        });
                    }
                    instance += 1;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    #[serde(rename = "T")]
    pub horizon: u64,
    pub p0: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub normalized_revenue: f64,
    pub normalized_se: f64,
    pub minmax_ratio: f64,
    pub ratio_se: f64,
    pub balanced: bool,
    pub mean_resolves: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub cell: Cell,
    /// Smallest inventory among products the relaxation sells.
    pub cbar: u64,
    /// Number of products the relaxation sells.
    pub k: usize,
    pub upper_bound: f64,
    pub method: Method,
    pub policy: PolicyOutcome,
    pub heuristic1: PolicyOutcome,
    pub heuristic2: PolicyOutcome,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    UpperBound(#[from] UpperBoundError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn relaxation(
    cfg: &ExperimentConfig,
    dyn_: &crate::model::DynamicInstance,
) -> Result<UpperBoundSolution, UpperBoundError> {
    if (dyn_.alpha() - 1.0).abs() <= ALPHA_ONE_TOL {
        solve_upper_bound_alpha1(dyn_)
    } else if dyn_.n() <= cfg.exact_n_max {
        solve_upper_bound_exact(dyn_, cfg.exact_n_max)
    } else {
        solve_upper_bound_fptas(dyn_, cfg.eps)
    }
}

/// Generates, solves and simulates one cell.
pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellResult, ExperimentError> {
    let dyn_ = generate(&GenConfig {
        n: cfg.n,
        horizon: cell.horizon,
        p0: cell.p0,
        gamma: cell.gamma,
        alpha: cell.alpha,
        seed: cell.seed,
    })?;
    let ub = relaxation(cfg, &dyn_)?;
    let x = &ub.xs.x;
    let support = ub.support();
    let cbar = support.iter().map(|&i| dyn_.c()[i]).min().unwrap_or(0);

    let pol = if (cell.alpha - 1.0).abs() <= ALPHA_ONE_TOL {
        capped_policy(&dyn_, x)?
    } else {
        fixed_target_policy(&dyn_, x, cfg.eps2.min(1.0 - cell.alpha))?
    };
    let hr1 = heuristic_policy(&dyn_, x, PolicyKind::Heuristic1)?;
    let hr2 = heuristic_policy(&dyn_, x, PolicyKind::Heuristic2)?;
    let sim = SimulationConfig {
        replicates: cfg.replicates,
        seed: cell.seed,
        mode: cfg.mode,
        upper_bound: Some(ub.objective),
        keep_trajectories: false,
    };
    let outcome = |spec| -> Result<PolicyOutcome, ExperimentError> {
        let rep = simulate(&dyn_, spec, &sim)?;
        Ok(PolicyOutcome {
            normalized_revenue: rep.normalized_revenue.unwrap_or(0.0),
            normalized_se: rep.normalized_se.unwrap_or(0.0),
            minmax_ratio: rep.minmax_ratio,
            ratio_se: rep.ratio_se,
            balanced: audit_balancing(&rep, cell.alpha, None).pass,
            mean_resolves: rep.mean_resolves,
        })
    };
    Ok(CellResult {
        cell: *cell,
        cbar,
        k: support.len(),
        upper_bound: ub.objective,
        method: ub.method,
        policy: outcome(&pol)?,
        heuristic1: outcome(&hr1)?,
        heuristic2: outcome(&hr2)?,
    })
}

/// Runs every cell, in parallel, returning results in grid order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Vec<(Cell, Result<CellResult, ExperimentError>)> {
    cfg.cells()
        .into_par_iter()
        .map(|cell| (cell, run_cell(cfg, &cell)))
        .collect()
}

/// Column means over successful cells, in the order policy, heuristic 1,
/// heuristic 2.
pub fn averages(results: &[CellResult], metric: fn(&PolicyOutcome) -> f64) -> [f64; 3] {
    let m = results.len().max(1) as f64;
    let mut out = [0.0; 3];
    for r in results {
        out[0] += metric(&r.policy);
        out[1] += metric(&r.heuristic1);
        out[2] += metric(&r.heuristic2);
    }
    out.map(|s| s / m)
}
