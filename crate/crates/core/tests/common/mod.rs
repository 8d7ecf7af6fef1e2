//! Independent oracles and random generators shared by the integration tests.
#![allow(dead_code)]

use fair_assort::lp::{lp_solve, LinearProgram, LpStatus, Sense};
use fair_assort::{DynamicInstance, Instance};
use rand::Rng;

pub fn random_instance<R: Rng>(rng: &mut R, n: usize, alpha: f64) -> Instance {
    let r = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let v = (0..n).map(|_| rng.gen_range(0.05..3.0)).collect();
    Instance::new(r, v, alpha).unwrap()
}

pub fn random_dynamic<R: Rng>(rng: &mut R, n: usize, alpha: f64, t: u64) -> DynamicInstance {
    let base = random_instance(rng, n, alpha);
    let c = (0..n).map(|_| rng.gen_range(1..=t)).collect();
    DynamicInstance::new(base, t, c).unwrap()
}

pub fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
}

pub fn mnl_value(r: &[f64], w: &[f64], set: &[usize]) -> f64 {
    let num: f64 = set.iter().map(|&i| r[i] * w[i]).sum();
    num / (1.0 + set.iter().map(|&i| w[i]).sum::<f64>())
}

/// Max revenue over sales vectors supported inside `support`, with
/// `x_i ≥ α x_j` written out for every ordered pair and optional per-product
/// caps. Variables: `x_a` for `a` in the support, then `x0`.
pub fn pairwise_support_lp(
    r: &[f64],
    v: &[f64],
    alpha: f64,
    caps: Option<&[f64]>,
    support: &[usize],
) -> f64 {
    let k = support.len();
    let mut obj = vec![0.0; k + 1];
    for (a, &i) in support.iter().enumerate() {
        obj[a] = r[i];
    }
    let mut lp = LinearProgram::new(k + 1).maximize(obj);
    lp.add_row(vec![1.0; k + 1], Sense::Eq, 1.0);
    for (a, &i) in support.iter().enumerate() {
        lp.add_sparse_row(&[(a, 1.0), (k, -v[i])], Sense::Le, 0.0);
        if let Some(c) = caps {
            lp.add_sparse_row(&[(a, 1.0)], Sense::Le, c[i]);
        }
        for b in 0..k {
            if a != b {
                lp.add_sparse_row(&[(a, 1.0), (b, -alpha)], Sense::Ge, 0.0);
            }
        }
    }
    let sol = lp_solve(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal, "r={r:?} v={v:?} alpha={alpha} caps={caps:?} support={support:?}");
    sol.objective
}

/// Optimal static revenue by enumerating supports.
pub fn bms_oracle(inst: &Instance) -> f64 {
    subsets(inst.n())
        .map(|s| pairwise_support_lp(inst.r(), inst.v(), inst.alpha(), None, &s))
        .fold(0.0, f64::max)
}

/// Optimal fluid-relaxation value `T Σ r_i x_i` by enumerating supports.
pub fn upper_bound_oracle(d: &DynamicInstance) -> f64 {
    let caps: Vec<f64> = (0..d.n()).map(|i| d.sales_cap(i)).collect();
    let best = subsets(d.n())
        .map(|s| pairwise_support_lp(d.r(), d.v(), d.alpha(), Some(&caps), &s))
        .fold(0.0, f64::max);
    d.horizon() as f64 * best
}

/// Best constrained revenue using the structure of optimal weights: for each
/// admissible support, a weight floor `v̲` from `{v_i} ∪ {α v_i}` and a revenue
/// threshold, products above it get `min(v_i, v̲/α)` and the rest `v̲`.
pub fn constrained_oracle(inst: &Instance, admits: impl Fn(&[usize]) -> bool) -> f64 {
    let (r, v, alpha) = (inst.r(), inst.v(), inst.alpha());
    let mut floors: Vec<f64> = v.iter().flat_map(|&x| [x, alpha * x]).collect();
    floors.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = r.to_vec();
    thresholds.push(f64::INFINITY);
    let mut best = 0.0;
    for s in subsets(inst.n()).filter(|s| admits(s)) {
        let vmin = s.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
        for &floor in floors.iter().filter(|&&f| f <= vmin) {
            for &th in &thresholds {
                let w: Vec<f64> = (0..inst.n())
                    .map(|i| if r[i] >= th { v[i].min(floor / alpha) } else { floor })
                    .collect();
                best = f64::max(best, mnl_value(r, &w, &s));
            }
        }
    }
    best
}

/// Best single assortment with weights pairwise within factor `α`.
pub fn deterministic_oracle(inst: &Instance) -> f64 {
    let (r, v, alpha) = (inst.r(), inst.v(), inst.alpha());
    subsets(inst.n())
        .filter(|s| {
            let lo = s.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
            let hi = s.iter().map(|&i| v[i]).fold(0.0, f64::max);
            lo >= alpha * hi * (1.0 - 1e-12)
        })
        .map(|s| mnl_value(r, v, &s))
        .fold(0.0, f64::max)
}

/// `E[min(Bin(T, p), c)]` by summing `P(Y ≥ k)` for `k = 1..c`, with the pmf
/// built from binomial coefficients directly. Small `T` only.
pub fn capped_sales_enumerated(t: u64, p: f64, c: u64) -> f64 {
    let n = t as usize;
    let mut coef = vec![1.0f64; n + 1];
    for k in 1..=n {
        coef[k] = coef[k - 1] * (n - k + 1) as f64 / k as f64;
    }
    let pmf: Vec<f64> = (0..=n)
        .map(|k| coef[k] * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .collect();
    (1..=c as usize)
        .map(|k| pmf.iter().skip(k).sum::<f64>())
        .sum()
}

/// LP optimum by enumerating vertices of `{x : rows, lower ≤ x ≤ upper}` for
/// finite bounds. Returns `None` when no vertex is feasible.
pub fn vertex_oracle(lp: &LinearProgram, tol: f64) -> Option<f64> {
    let n = lp.num_vars();
    // Every constraint as a hyperplane a·x = b.
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    let mut best: Option<f64> = None;
    let m = planes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&idx.iter().map(|&k| planes[k].clone()).collect::<Vec<_>>()) {
            if lp.max_violation(&x) <= tol {
                let val: f64 = lp.objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                best = Some(best.map_or(val, |b: f64| b.max(val)));
            }
        }
        // Next n-combination of 0..m.
        let mut i = n;
        while i > 0 && idx[i - 1] == m - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    best
}

fn solve_square(planes: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let n = planes.len();
    let mut a: Vec<Vec<f64>> = planes
        .iter()
        .map(|(row, b)| {
            let mut r = row.clone();
            r.push(*b);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        for i in 0..n {
            if i != col {
                let f = a[i][col] / a[col][col];
                for k in col..=n {
                    a[i][k] -= f * a[col][k];
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
