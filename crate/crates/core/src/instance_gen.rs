//! Random test problems.
//!
//! Revenues are uniform on `[0, 10]` and raw weights uniform on `[1, 10]`.
//! Weights are rescaled so that the no-purchase probability with every
//! product offered equals `p0`. Inventories are `⌈γ · Demand_i⌉` where
//! `Demand_i = 3T φ(i, S*)/4 + T φ(i, N)/4` mixes the purchase probability under
//! the unconstrained optimal assortment `S*` with that under the full set.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{revenue_ordered_optimum, DynamicInstance, Instance, ModelError};

/// Stream used by the generator, distinct from every simulation replicate
/// stream in practice.
pub const GEN_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub p0: f64,
    pub gamma: f64,
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_n() -> usize {
    40
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("p0 = {0} must lie in (0, 1)")]
    P0(f64),
    #[error("gamma = {0} must be positive")]
    Gamma(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Draws an instance; the same configuration always yields the same instance.
pub fn generate(cfg: &GenConfig) -> Result<DynamicInstance, GenError> {
    if !(cfg.p0 > 0.0 && cfg.p0 < 1.0) {
        return Err(GenError::P0(cfg.p0));
    }
    if !(cfg.gamma > 0.0 && cfg.gamma.is_finite()) {
        return Err(GenError::Gamma(cfg.gamma));
    }
    if cfg.n == 0 {
        return Err(ModelError::Empty.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(GEN_STREAM);
    let r: Vec<f64> = (0..cfg.n)
        .map(|_| loop {
            let x = rng.gen_range(0.0..=10.0);
            if x > 0.0 {
                break x;
            }
        })
        .collect();
    let raw: Vec<f64> = (0..cfg.n).map(|_| rng.gen_range(1.0..=10.0)).collect();
    let total: f64 = raw.iter().sum();
    let scale = (1.0 - cfg.p0) / cfg.p0;
    let v: Vec<f64> = raw.iter().map(|w| scale * w / total).collect();

    let all: Vec<usize> = (0..cfg.n).collect();
    let (s_star, _) = revenue_ordered_optimum(&r, &v, &all);
    let den_all = 1.0 + v.iter().sum::<f64>();
    let den_star = 1.0 + s_star.iter().map(|&j| v[j]).sum::<f64>();
    let t = cfg.horizon as f64;
    let c: Vec<u64> = (0..cfg.n)
        .map(|i| {
            let in_star = if s_star.contains(&i) { v[i] / den_star } else { 0.0 };
            let demand = 0.75 * t * in_star + 0.25 * t * v[i] / den_all;
            ((cfg.gamma * demand).ceil() as u64).max(1)
        })
        .collect();
    let base = Instance::new(r, v, cfg.alpha)?;
    Ok(DynamicInstance::new(base, cfg.horizon, c)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: u64) -> GenConfig {
        GenConfig {
            n: 40,
            horizon: 2000,
            p0: 0.1,
            gamma: 0.6,
            alpha: 0.5,
            seed,
        }
    }

    #[test]
    fn weights_hit_no_purchase_target() {
        for seed in 0..5 {
            let d = generate(&cfg(seed)).unwrap();
            let total: f64 = d.v().iter().sum();
            assert!((total - 9.0).abs() < 1e-12);
            assert!((1.0 / (1.0 + total) - 0.1).abs() < 1e-12);
            assert!(d.c().iter().all(|&c| c >= 1));
            assert!(d.r().iter().all(|&r| r > 0.0 && r <= 10.0));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate(&cfg(9)).unwrap(), generate(&cfg(9)).unwrap());
        assert_ne!(generate(&cfg(9)).unwrap(), generate(&cfg(10)).unwrap());
    }

    #[test]
    fn large_gamma_gives_ample_inventory() {
        let mut c = cfg(1);
        c.n = 5;
        c.horizon = 50;
        c.gamma = 1e3;
        let d = generate(&c).unwrap();
        assert!(d.c().iter().all(|&ci| ci >= 50));
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg(0);
        c.p0 = 1.0;
        assert!(matches!(generate(&c), Err(GenError::P0(_))));
        let mut c = cfg(0);
        c.gamma = 0.0;
        assert!(matches!(generate(&c), Err(GenError::Gamma(_))));
    }
}
