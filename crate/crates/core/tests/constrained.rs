mod common;

use common::{constrained_oracle, mnl_value, random_instance, rel_close, subsets};
use fair_assort::constrained::{
    oracle_bruteforce, oracle_unconstrained, solve_bms_constrained, transformed_weights, Category,
    ConstraintFamily, ConstraintOracle,
};
use fair_assort::model::FEAS_TOL;
use fair_assort::{check_bms_feasible, solve_bms};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn unconstrained_family_matches_static_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..200 {
        let n = rng.gen_range(1..=8);
        let alpha = [0.25, 0.5, 0.75, 1.0][case % 4];
        let inst = random_instance(&mut rng, n, alpha);
        let c = solve_bms_constrained(&inst, &oracle_unconstrained()).unwrap();
        assert!(rel_close(c.revenue, solve_bms(&inst).revenue, 1e-9), "case {case}");
        assert!(check_bms_feasible(&inst, &c.xs, FEAS_TOL).is_feasible());
    }
}

#[test]
fn cardinality_one_is_best_singleton() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.gen_range(1..=7);
        let alpha = rng.gen_range(0.1..1.0);
        let inst = random_instance(&mut rng, n, alpha);
        let fam = ConstraintFamily::MaxCard(1);
        let c = solve_bms_constrained(&inst, fam.oracle(16).as_ref()).unwrap();
        let best = (0..n)
            .map(|i| inst.r()[i] * inst.v()[i] / (1.0 + inst.v()[i]))
            .fold(0.0, f64::max);
        assert!(rel_close(c.revenue, best, 1e-12));
        assert!(c.support.len() <= 1);
    }
}

fn random_family(rng: &mut ChaCha8Rng, n: usize) -> ConstraintFamily {
    match rng.gen_range(0..3) {
        0 => ConstraintFamily::MaxCard(rng.gen_range(1..=n)),
        1 => ConstraintFamily::MinCard(rng.gen_range(1..=n)),
        _ => {
            let cats = (0..rng.gen_range(1..=2))
                .map(|_| {
                    let ids: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                    let min_count = if ids.is_empty() { 0 } else { rng.gen_range(1..=ids.len()) };
                    Category { ids, min_count }
                })
                .collect();
            ConstraintFamily::Categories(cats)
        }
    }
}

#[test]
fn exact_oracle_matches_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..150 {
        let n = rng.gen_range(1..=6);
        let alpha = rng.gen_range(0.1..1.0);
        let inst = random_instance(&mut rng, n, alpha);
        let fam = random_family(&mut rng, n);
        let c = solve_bms_constrained(&inst, fam.oracle(16).as_ref()).unwrap();
        let want = constrained_oracle(&inst, |s| fam.admits(s));
        assert!(rel_close(c.revenue, want, 1e-7), "case {case}: {} vs {want} for {fam:?}", c.revenue);
        if c.feasible && !c.support.is_empty() {
            assert!(fam.admits(&c.support));
            assert!(check_bms_feasible(&inst, &c.xs, FEAS_TOL).is_feasible());
        }
    }
}

#[test]
fn min_cardinality_three_of_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let inst = random_instance(&mut rng, 6, 0.5);
        let fam = ConstraintFamily::MinCard(3);
        let c = solve_bms_constrained(&inst, fam.oracle(16).as_ref()).unwrap();
        assert!(c.support.len() >= 3);
        assert!(rel_close(c.revenue, constrained_oracle(&inst, |s| s.len() >= 3), 1e-7));
    }
}

#[test]
fn transformed_weights_stay_in_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let alpha = rng.gen_range(0.1..1.0);
        let inst = random_instance(&mut rng, 6, alpha);
        let r_hat = inst.r()[rng.gen_range(0..6)];
        let v_hat = inst.v()[rng.gen_range(0..6)];
        let w = transformed_weights(&inst, r_hat, v_hat);
        for i in (0..6).filter(|&i| inst.v()[i] >= v_hat) {
            assert!(w[i] >= v_hat && w[i] <= v_hat / inst.alpha() * (1.0 + 1e-15));
        }
    }
}

#[test]
fn revenue_ordered_oracle_is_exact() {
    let r = [3.0, 2.0, 1.0];
    let w = [1.0, 1.0, 1.0];
    let set = oracle_unconstrained().solve(&[0, 1, 2], &r, &w).unwrap().unwrap();
    let best = subsets(3).map(|s| mnl_value(&r, &w, &s)).fold(0.0, f64::max);
    assert!((mnl_value(&r, &w, &set) - best).abs() < 1e-15);
    assert!(set == vec![0] || set == vec![0, 1]);
    assert_eq!(oracle_unconstrained().solve(&[], &r, &w).unwrap(), Some(vec![]));
    assert_eq!(oracle_unconstrained().solve(&[0], &[2.0], &[1.0]).unwrap(), Some(vec![0]));
}

#[test]
fn brute_force_oracle_edges() {
    let r = [3.0, 2.0, 1.0];
    let w = [1.0, 1.0, 1.0];
    let only_empty = oracle_bruteforce(|s: &[usize]| s.is_empty(), 16);
    assert_eq!(only_empty.solve(&[0, 1, 2], &r, &w).unwrap(), Some(vec![]));
    let singleton = oracle_bruteforce(|s: &[usize]| s == [2], 16);
    assert_eq!(singleton.solve(&[0, 1, 2], &r, &w).unwrap(), Some(vec![2]));
    let never = oracle_bruteforce(|_: &[usize]| false, 16);
    assert_eq!(never.solve(&[0, 1, 2], &r, &w).unwrap(), None);
    let small = oracle_bruteforce(|_: &[usize]| true, 2);
    assert!(small.solve(&[0, 1, 2], &r, &w).is_err());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let r: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..5.0)).collect();
        let w: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..2.0)).collect();
        let mask: u32 = rng.gen_range(0..64);
        let pred = move |s: &[usize]| s.iter().map(|&i| 1u32 << i).sum::<u32>() & mask == 0;
        let got = oracle_bruteforce(pred, 16).solve(&[0, 1, 2, 3, 4, 5], &r, &w).unwrap().unwrap();
        let best = std::iter::once(vec![])
            .chain(subsets(6))
            .filter(|s| pred(s))
            .map(|s| mnl_value(&r, &w, &s))
            .fold(0.0, f64::max);
        assert!((mnl_value(&r, &w, &got) - best).abs() < 1e-12);
    }
}

#[test]
fn infeasible_family_yields_empty_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let inst = random_instance(&mut rng, 3, 0.5);
    let fam = ConstraintFamily::MinCard(4);
    let c = solve_bms_constrained(&inst, fam.oracle(16).as_ref()).unwrap();
    assert!(!c.feasible);
    assert_eq!(c.revenue, 0.0);
    assert!(c.support.is_empty());
}

#[test]
fn family_json_forms() {
    let all: ConstraintFamily = serde_json::from_str(r#""all""#).unwrap();
    assert_eq!(all, ConstraintFamily::All);
    let max: ConstraintFamily = serde_json::from_str(r#"{"max_card":2}"#).unwrap();
    assert_eq!(max, ConstraintFamily::MaxCard(2));
    let min: ConstraintFamily = serde_json::from_str(r#"{"min_card":3}"#).unwrap();
    assert_eq!(min, ConstraintFamily::MinCard(3));
    let cats: ConstraintFamily =
        serde_json::from_str(r#"{"categories":[{"ids":[0,2],"min_count":1}]}"#).unwrap();
    assert!(cats.admits(&[2]) && !cats.admits(&[1]));
    assert!(serde_json::from_str::<ConstraintFamily>(r#""some""#).is_err());
}
