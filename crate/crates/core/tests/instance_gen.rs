use fair_assort::model::revenue_ordered_optimum;
use fair_assort::{generate, GenConfig};

fn cfg(n: usize, horizon: u64, p0: f64, gamma: f64, seed: u64) -> GenConfig {
    GenConfig { n, horizon, p0, gamma, alpha: 0.5, seed }
}

#[test]
fn weights_hit_the_no_purchase_target() {
    for (seed, p0) in [(1, 0.1), (2, 0.3), (3, 0.5), (4, 0.9)] {
        let d = generate(&cfg(40, 200, p0, 0.8, seed)).unwrap();
        let x0 = 1.0 / (1.0 + d.v().iter().sum::<f64>());
        assert!((x0 - p0).abs() < 1e-12);
        assert!(d.r().iter().all(|&r| r > 0.0 && r <= 10.0));
        // Raw weights lie in [1, 10], so the scaled ones within a factor of 10.
        let lo = d.v().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.v().iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo <= 10.0 + 1e-12);
    }
}

#[test]
fn inventories_follow_the_demand_mix() {
    let (t, gamma) = (400, 0.6);
    let d = generate(&cfg(10, t, 0.3, gamma, 7)).unwrap();
    let (v, r) = (d.v(), d.r());
    let all: Vec<usize> = (0..10).collect();
    let (s_star, _) = revenue_ordered_optimum(r, v, &all);
    let den_all = 1.0 + v.iter().sum::<f64>();
    let den_star = 1.0 + s_star.iter().map(|&j| v[j]).sum::<f64>();
    for i in 0..10 {
        let in_star = if s_star.contains(&i) { v[i] / den_star } else { 0.0 };
        let demand = 0.75 * t as f64 * in_star + 0.25 * t as f64 * v[i] / den_all;
        let want = ((gamma * demand).ceil() as u64).max(1);
        assert_eq!(d.c()[i], want, "product {i}");
    }
}

#[test]
fn deterministic_per_seed() {
    let a = generate(&cfg(12, 100, 0.1, 0.8, 99)).unwrap();
    assert_eq!(a, generate(&cfg(12, 100, 0.1, 0.8, 99)).unwrap());
    assert_ne!(a, generate(&cfg(12, 100, 0.1, 0.8, 100)).unwrap());
}

#[test]
fn config_json_and_validation() {
    let c: GenConfig = serde_json::from_str(r#"{"T":200,"p0":0.1,"gamma":0.6,"alpha":0.5}"#).unwrap();
    assert_eq!((c.n, c.horizon, c.seed), (40, 200, 0));
    assert!(generate(&cfg(5, 10, 0.0, 0.8, 1)).is_err());
    assert!(generate(&cfg(5, 10, 1.0, 0.8, 1)).is_err());
    assert!(generate(&cfg(5, 10, 0.3, 0.0, 1)).is_err());
    assert!(generate(&cfg(0, 10, 0.3, 0.8, 1)).is_err());
}
