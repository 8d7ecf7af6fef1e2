mod common;

use common::{random_dynamic, rel_close, upper_bound_oracle};
use fair_assort::lp::Simplex;
use fair_assort::model::FEAS_TOL;
use fair_assort::upper_bound::{
    check_upper_bound_feasible, solve_mckp, solve_support_lp, BalanceEncoding, MckpInstance,
    MckpItem, UpperBoundError, EXACT_N_MAX,
};
use fair_assort::{
    solve_bms, solve_upper_bound_alpha1, solve_upper_bound_exact, solve_upper_bound_fptas,
    DynamicInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn fptas_within_guarantee_of_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..150 {
        let n = rng.gen_range(1..=6);
        let t = rng.gen_range(1..=100);
        let alpha = rng.gen_range(0.05..1.0);
        let d = random_dynamic(&mut rng, n, alpha, t);
        let want = upper_bound_oracle(&d);
        let got = solve_upper_bound_fptas(&d, 0.05).unwrap();
        assert!(got.objective >= 0.95 * want - 1e-9, "case {case}: {} vs {want}", got.objective);
        assert!(got.objective <= want * (1.0 + 1e-7) + 1e-9, "case {case}");
        assert!(check_upper_bound_feasible(&d, &got.xs, FEAS_TOL).is_feasible(), "case {case}");
    }
}

#[test]
fn exact_solver_matches_pairwise_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..100 {
        let n = rng.gen_range(1..=6);
        let t = rng.gen_range(1..=60);
        let alpha = rng.gen_range(0.05..=1.0);
        let d = random_dynamic(&mut rng, n, alpha, t);
        let exact = solve_upper_bound_exact(&d, EXACT_N_MAX).unwrap();
        assert!(rel_close(exact.objective, upper_bound_oracle(&d), 1e-7), "case {case}");
        assert!(check_upper_bound_feasible(&d, &exact.xs, FEAS_TOL).is_feasible());
    }
}

#[test]
fn ample_inventory_recovers_static_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let n = rng.gen_range(1..=7);
        let t = rng.gen_range(1..=100);
        let alpha = rng.gen_range(0.05..=1.0);
        let base = common::random_instance(&mut rng, n, alpha);
        let static_rev = solve_bms(&base).revenue;
        let d = DynamicInstance::new(base, t, vec![t; n]).unwrap();
        let fptas = solve_upper_bound_fptas(&d, 0.05).unwrap();
        assert!(fptas.objective >= 0.95 * t as f64 * static_rev - 1e-9);
        let exact = solve_upper_bound_exact(&d, EXACT_N_MAX).unwrap();
        assert!(rel_close(exact.objective, t as f64 * static_rev, 1e-7));
    }
}

#[test]
fn alpha_one_solver_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for case in 0..150 {
        let n = rng.gen_range(1..=6);
        let t = rng.gen_range(1..=80);
        let d = random_dynamic(&mut rng, n, 1.0, t);
        let got = solve_upper_bound_alpha1(&d).unwrap();
        assert!(rel_close(got.objective, upper_bound_oracle(&d), 1e-7), "case {case}");
        assert!(check_upper_bound_feasible(&d, &got.xs, FEAS_TOL).is_feasible());
    }
    let d = random_dynamic(&mut rng, 3, 0.5, 10);
    assert!(matches!(solve_upper_bound_alpha1(&d), Err(UpperBoundError::NotAlphaOne(_))));
}

#[test]
fn encodings_agree_on_every_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut simplex = Simplex::default();
    for _ in 0..40 {
        let n = rng.gen_range(1..=5);
        let alpha = rng.gen_range(0.05..=1.0);
        let t = rng.gen_range(1..=50);
        let d = random_dynamic(&mut rng, n, alpha, t);
        for support in common::subsets(n) {
            let (_, pair) = solve_support_lp(&d, &support, BalanceEncoding::Pairwise, &mut simplex).unwrap();
            let (_, aux) = solve_support_lp(&d, &support, BalanceEncoding::Auxiliary, &mut simplex).unwrap();
            assert!(rel_close(pair, aux, 1e-9), "{support:?}: {pair} vs {aux}");
        }
    }
}

#[test]
fn rejects_bad_arguments() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let d = random_dynamic(&mut rng, 3, 0.5, 10);
    for eps in [0.0, 0.5, -1.0, f64::NAN] {
        assert!(matches!(solve_upper_bound_fptas(&d, eps), Err(UpperBoundError::Epsilon(_))));
    }
    assert!(matches!(solve_upper_bound_exact(&d, 2), Err(UpperBoundError::TooLarge { .. })));
}

fn mckp_exhaustive(inst: &MckpInstance) -> f64 {
    let sizes: Vec<usize> = inst.classes.iter().map(|c| c.len() + 1).collect();
    let total: usize = sizes.iter().product();
    let mut best = 0.0f64;
    for mut code in 0..total {
        let (mut value, mut weight) = (0.0, 0.0);
        for (k, &s) in sizes.iter().enumerate() {
            let pick = code % s;
            code /= s;
            if pick > 0 {
                value += inst.classes[k][pick - 1].value;
                weight += inst.classes[k][pick - 1].weight;
            }
        }
        if weight <= inst.capacity {
            best = best.max(value);
        }
    }
    best
}

#[test]
fn mckp_against_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for case in 0..400 {
        let classes = (0..rng.gen_range(1..=4))
            .map(|_| {
                (0..rng.gen_range(0..=3))
                    .map(|_| MckpItem {
                        value: rng.gen_range(0.0..5.0),
                        weight: rng.gen_range(0.0..1.0),
                    })
                    .collect()
            })
            .collect();
        let inst = MckpInstance { classes, capacity: rng.gen_range(0.0..2.0) };
        let eps = [0.01, 0.1, 0.3][case % 3];
        let opt = mckp_exhaustive(&inst);
        let sel = solve_mckp(&inst, eps);
        let (mut value, mut weight) = (0.0, 0.0);
        for (k, pick) in sel.choice.iter().enumerate() {
            if let Some(j) = *pick {
                value += inst.classes[k][j].value;
                weight += inst.classes[k][j].weight;
            }
        }
        assert!(weight <= inst.capacity + 1e-12, "case {case}");
        assert!((value - sel.value).abs() <= 1e-9 && (weight - sel.weight).abs() <= 1e-9);
        assert!(value >= (1.0 - eps) * opt - 1e-12, "case {case}: {value} vs {opt}");
    }
}
