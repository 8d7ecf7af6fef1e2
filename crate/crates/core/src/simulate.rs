//! Monte-Carlo evaluation of dynamic policies.
//!
//! Each replicate draws from its own ChaCha8 stream, seeded with `seed` and
//! positioned at stream number `replicate`. Results therefore do not depend
//! on how replicates are scheduled across threads, and two policies
//! simulated with the same seed see the same stream in every replicate.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{sales_to_distribution, AssortmentDistribution, DynamicInstance, ModelError, SalesVector};
use crate::policy::{PolicyError, PolicyRunner, PolicySpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("policy has {got} targets for {expected} products")]
    Dimension { got: usize, expected: usize },
    #[error("replicate {replicate}: product {product} sold beyond its inventory")]
    Inventory { replicate: u64, product: usize },
    #[error("replicate {replicate}: {source}")]
    Policy {
        replicate: u64,
        #[source]
        source: PolicyError,
    },
    #[error("replicate {replicate}, period {period}: {source}")]
    Distribution {
        replicate: u64,
        period: u64,
        #[source]
        source: ModelError,
    },
}

/// How a period's outcome is drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Draw the purchased product straight from the target probabilities.
    #[default]
    Direct,
    /// Draw an assortment from the nested distribution realizing the
    /// targets, then the customer's MNL choice within it.
    Assortment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub replicates: u64,
    pub seed: u64,
    #[serde(default)]
    pub mode: SamplingMode,
    /// Relaxation optimum used to normalize revenue.
    #[serde(default)]
    pub upper_bound: Option<f64>,
    #[serde(default)]
    pub keep_trajectories: bool,
}

impl SimulationConfig {
    pub fn new(replicates: u64, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            mode: SamplingMode::Direct,
            upper_bound: None,
            keep_trajectories: false,
        }
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub revenue: f64,
    pub sales: Vec<u64>,
    /// Period in which each product sold its last unit.
    pub stockout: Vec<Option<u64>>,
    pub resolves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub replicates: u64,
    pub mean_revenue: f64,
    pub se_revenue: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_revenue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalized_se: Option<f64>,
    pub mean_sales: Vec<f64>,
    pub se_sales: Vec<f64>,
    /// Smallest over largest nonzero mean sales; 1 when nothing sells.
    pub minmax_ratio: f64,
    /// Delta-method standard error of `minmax_ratio`.
    pub ratio_se: f64,
    pub mean_resolves: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<Vec<Trajectory>>,
}

/// Random stream for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn draw_index(p: &[f64], u: f64) -> Option<usize> {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return Some(i);
        }
    }
    None
}

struct Sampler {
    last: Vec<f64>,
    dist: Option<AssortmentDistribution>,
    weights: Vec<f64>,
}

impl Sampler {
    fn new(n: usize) -> Self {
        Self {
            last: vec![f64::NAN; n],
            dist: None,
            weights: vec![0.0; n],
        }
    }

    fn draw(
        &mut self,
        dyn_: &DynamicInstance,
        mode: SamplingMode,
        p: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<usize>, ModelError> {
        match mode {
            SamplingMode::Direct => Ok(draw_index(p, rng.gen())),
            SamplingMode::Assortment => {
                if self.dist.is_none() || self.last.as_slice() != p {
                    let xs = SalesVector::from_purchases(p.to_vec());
                    self.dist = Some(sales_to_distribution(dyn_.base(), &xs)?);
                    self.last.copy_from_slice(p);
                }
                let set = self.dist.as_ref().map(|d| d.sample(rng)).unwrap_or(&[]);
                let v = dyn_.v();
                let den = 1.0 + set.iter().map(|&j| v[j]).sum::<f64>();
                self.weights.iter_mut().for_each(|w| *w = 0.0);
                for &j in set {
                    self.weights[j] = v[j] / den;
                }
                Ok(draw_index(&self.weights, rng.gen()))
            }
        }
    }
}

fn run_replicate(
    dyn_: &DynamicInstance,
    spec: &PolicySpec,
    mode: SamplingMode,
    seed: u64,
    replicate: u64,
) -> Result<Trajectory, SimError> {
    let n = dyn_.n();
    let r = dyn_.r();
    let mut rng = replicate_rng(seed, replicate);
    let mut runner = PolicyRunner::new(dyn_, spec);
    let mut sampler = Sampler::new(n);
    let mut remaining = dyn_.c().to_vec();
    let mut sold = vec![0u64; n];
    let mut stockout = vec![None; n];
    let mut revenue = 0.0;
    let mut ran_out = false;
    for t in 1..=dyn_.horizon() {
        let p = runner
            .probabilities(t, &remaining, &sold, ran_out)
            .map_err(|source| SimError::Policy { replicate, source })?;
        ran_out = false;
        let pick = sampler
            .draw(dyn_, mode, &p, &mut rng)
            .map_err(|source| SimError::Distribution {
                replicate,
                period: t,
                source,
            })?;
        if let Some(i) = pick {
            if remaining[i] == 0 {
                return Err(SimError::Inventory {
                    replicate,
                    product: i,
                });
            }
            remaining[i] -= 1;
            sold[i] += 1;
            revenue += r[i];
            if remaining[i] == 0 {
                stockout[i] = Some(t);
                ran_out = true;
            }
        }
    }
    Ok(Trajectory {
        revenue,
        sales: sold,
        stockout,
        resolves: runner.resolves(),
    })
}

fn mean_var(xs: impl Iterator<Item = f64> + Clone, count: f64) -> (f64, f64) {
    let mean = xs.clone().sum::<f64>() / count;
    let var = if count > 1.0 {
        xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Simulates `cfg.replicates` independent runs of the policy.
pub fn simulate(
    dyn_: &DynamicInstance,
    spec: &PolicySpec,
    cfg: &SimulationConfig,
) -> Result<SimulationReport, SimError> {
    if cfg.replicates == 0 {
        return Err(SimError::NoReplicates);
    }
    if spec.targets.len() != dyn_.n() {
        return Err(SimError::Dimension {
            got: spec.targets.len(),
            expected: dyn_.n(),
        });
    }
    let runs: Vec<Trajectory> = (0..cfg.replicates)
        .into_par_iter()
        .map(|k| run_replicate(dyn_, spec, cfg.mode, cfg.seed, k))
        .collect::<Result<_, _>>()?;

    let n = dyn_.n();
    let m = cfg.replicates as f64;
    let (mean_revenue, var_rev) = mean_var(runs.iter().map(|t| t.revenue), m);
    let se_revenue = (var_rev / m).sqrt();
    let mut mean_sales = vec![0.0; n];
    let mut se_sales = vec![0.0; n];
    for i in 0..n {
        let (mu, var) = mean_var(runs.iter().map(|t| t.sales[i] as f64), m);
        mean_sales[i] = mu;
        se_sales[i] = (var / m).sqrt();
    }
    let (minmax_ratio, ratio_se) = ratio_with_se(&runs, &mean_sales, &se_sales, m);
    let mean_resolves = runs.iter().map(|t| t.resolves as f64).sum::<f64>() / m;
    let (normalized_revenue, normalized_se) = match cfg.upper_bound {
        Some(ub) if ub > 0.0 => (Some(mean_revenue / ub), Some(se_revenue / ub)),
        _ => (None, None),
    };
    Ok(SimulationReport {
        replicates: cfg.replicates,
        mean_revenue,
        se_revenue,
        normalized_revenue,
        normalized_se,
        mean_sales,
        se_sales,
        minmax_ratio,
        ratio_se,
        mean_resolves,
        trajectories: cfg.keep_trajectories.then_some(runs),
    })
}

// min/max of the nonzero mean sales, with se(a/b)² ≈ (a/b)²(σa²/a² + σb²/b² - 2σab/(ab)).
fn ratio_with_se(runs: &[Trajectory], mean: &[f64], se: &[f64], m: f64) -> (f64, f64) {
    let sold: Vec<usize> = (0..mean.len()).filter(|&i| mean[i] > 0.0).collect();
    let by = |f: fn(f64, f64) -> bool| {
        sold.iter()
            .copied()
            .reduce(|a, b| if f(mean[b], mean[a]) { b } else { a })
    };
    let (Some(lo), Some(hi)) = (by(|x, y| x < y), by(|x, y| x > y)) else {
        return (1.0, 0.0);
    };
    if lo == hi || mean[lo] == mean[hi] {
        return (1.0, 0.0);
    }
    let (a, b) = (mean[lo], mean[hi]);
    let ratio = a / b;
    let cov = if m > 1.0 {
        runs.iter()
            .map(|t| (t.sales[lo] as f64 - a) * (t.sales[hi] as f64 - b))
            .sum::<f64>()
            / (m - 1.0)
            / m
    } else {
        0.0
    };
    let rel = (se[lo] / a).powi(2) + (se[hi] / b).powi(2) - 2.0 * cov / (a * b);
    (ratio, ratio * rel.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancingAudit {
    pub pass: bool,
    pub ratio: f64,
    pub alpha: f64,
    pub tol: f64,
    /// `ratio - (alpha - tol)`; negative on failure.
    pub margin: f64,
}

/// Checks `minmax_ratio ≥ α - tol`, with `tol` defaulting to three standard
/// errors of the ratio.
pub fn audit_balancing(report: &SimulationReport, alpha: f64, tol: Option<f64>) -> BalancingAudit {
    let tol = tol.unwrap_or(3.0 * report.ratio_se);
    let margin = report.minmax_ratio - (alpha - tol);
    BalancingAudit {
        pass: margin >= 0.0,
        ratio: report.minmax_ratio,
        alpha,
        tol,
        margin,
    }
}
