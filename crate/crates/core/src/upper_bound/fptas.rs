use serde::{Deserialize, Serialize};

use super::mckp::{solve_mckp, MckpInstance, MckpItem};
use super::{Method, UpperBoundError, UpperBoundSolution};
use crate::model::DynamicInstance;

/// Size of the search performed by [`solve_upper_bound_fptas`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridStats {
    /// Points guessed for the no-purchase probability.
    pub grid0: usize,
    /// Points guessed for the largest purchase probability.
    pub grid_y: usize,
    /// Knapsack problems actually solved.
    pub solved: usize,
    /// Pairs skipped because their relaxation bound could not improve the
    /// incumbent by more than the rounding factor.
    pub pruned: usize,
}

// Geometric grid lo·ratio^k for k = 0..=steps with the last point clamped to hi.
fn geometric(lo: f64, hi: f64, ratio: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut p = lo;
    for _ in 0..=steps {
        if p >= hi {
            out.push(hi);
            break;
        }
        out.push(p);
        p *= ratio;
    }
    if out.last().map_or(true, |&l| l < hi) {
        out.push(hi);
    }
    out
}

fn steps(ratio_range: f64, base: f64) -> usize {
    (ratio_range.ln() / base.ln()).ceil().max(0.0) as usize
}

/// `(1 - eps)`-approximation of the fluid relaxation.
///
/// The no-purchase probability `x̄0` and the largest purchase probability `ȳ`
/// are guessed on geometric grids with ratio `1 + δ`,
/// `δ = (1 - eps)^(-1/4) - 1`. For each guess, every product that can sell at
/// least `αȳ` gets a geometric menu of rates in `[αȳ, min{ȳ, v_i x̄0, c_i/T}]`,
/// and a multiple-choice knapsack with capacity `1 - x̄0` picks one rate per
/// product to within a factor `1/(1 + δ)`.
///
/// Guesses are visited in decreasing order of a relaxation bound; once the
/// bound falls below `(1 + δ)` times the incumbent no remaining guess can
/// change the guarantee and the search stops.
pub fn solve_upper_bound_fptas(
    dyn_: &DynamicInstance,
    eps: f64,
) -> Result<UpperBoundSolution, UpperBoundError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(UpperBoundError::Epsilon(eps));
    }
    let n = dyn_.n();
    let (r, v, alpha) = (dyn_.r(), dyn_.v(), dyn_.alpha());
    let nf = n as f64;
    let vmax = v.iter().cloned().fold(0.0, f64::max);
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let cmin = (0..n).map(|i| dyn_.sales_cap(i)).fold(f64::INFINITY, f64::min);
    let delta = (1.0 - eps).powf(-0.25) - 1.0;
    let ratio = 1.0 + delta;

    let x0_lo = 1.0 / (1.0 + nf * vmax);
    let grid0 = geometric(x0_lo, 1.0, ratio, steps(1.0 + nf * vmax, ratio));
    let y_min = cmin.min(vmin / (1.0 + nf * vmax));
    let grid_y = geometric(y_min / ratio, 1.0, ratio, steps(1.0 / y_min, ratio));

    let mut by_revenue: Vec<usize> = (0..n).collect();
    by_revenue.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
    let caps: Vec<f64> = (0..n).map(|i| dyn_.sales_cap(i)).collect();
    let upper = |i: usize, x0: f64, y: f64| y.min(v[i] * x0).min(caps[i]);

    // Fractional bound: fill capacity with the best revenues at their upper rates.
    let bound = |x0: f64, y: f64| -> f64 {
        let lo = alpha * y;
        let mut room = 1.0 - x0;
        let mut val = 0.0;
        for &i in &by_revenue {
            if room <= 0.0 {
                break;
            }
            if lo > (v[i] * x0).min(caps[i]) {
                continue;
            }
            let take = upper(i, x0, y).min(room);
            val += r[i] * take;
            room -= take;
        }
        val
    };

    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(grid0.len() * grid_y.len());
    for (a, &x0) in grid0.iter().enumerate() {
        if x0 >= 1.0 {
            continue;
        }
        for (b, &y) in grid_y.iter().enumerate() {
            let ub = bound(x0, y);
            if ub > 0.0 {
                pairs.push((ub, a, b));
            }
        }
    }
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0).then((p.1, p.2).cmp(&(q.1, q.2))));

    let mckp_eps = delta / ratio;
    let mut best_val = 0.0;
    let mut best_x = vec![0.0; n];
    let mut solved = 0;
    for &(ub, a, b) in &pairs {
        if ub <= best_val * ratio {
            break;
        }
        let (x0, y) = (grid0[a], grid_y[b]);
        let lo = alpha * y;
        let members: Vec<usize> = (0..n)
            .filter(|&i| lo <= (v[i] * x0).min(caps[i]))
            .collect();
        let classes: Vec<Vec<MckpItem>> = members
            .iter()
            .map(|&i| {
                let hi = upper(i, x0, y);
                geometric(lo, hi, ratio, steps(hi / lo, ratio))
                    .into_iter()
                    .map(|w| MckpItem {
                        value: r[i] * w,
                        weight: w,
                    })
                    .collect()
            })
            .collect();
        let mckp = MckpInstance {
            classes,
            capacity: 1.0 - x0,
        };
        let sel = solve_mckp(&mckp, mckp_eps);
        solved += 1;
        if sel.value > best_val {
            best_val = sel.value;
            best_x = vec![0.0; n];
            for (k, choice) in sel.choice.iter().enumerate() {
                if let Some(item) = choice {
                    best_x[members[k]] = mckp.classes[k][*item].weight;
                }
            }
        }
    }

    let mut sol = UpperBoundSolution::from_x(dyn_, best_x, eps, Method::Fptas);
    sol.grid = Some(GridStats {
        grid0: grid0.len(),
        grid_y: grid_y.len(),
        solved,
        pruned: pairs.len() - solved,
    });
    Ok(sol)
}
