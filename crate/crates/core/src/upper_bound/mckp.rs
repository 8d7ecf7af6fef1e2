//! Multiple-choice knapsack: pick at most one item per class, total weight
//! within capacity, maximizing total value.
//!
//! Values are scaled to integers and a dynamic program records, for each
//! scaled total value, the lightest selection reaching it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MckpItem {
    pub value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MckpInstance {
    pub classes: Vec<Vec<MckpItem>>,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MckpSelection {
    /// Chosen item index per class, `None` when the class is skipped.
    pub choice: Vec<Option<usize>>,
    pub value: f64,
    pub weight: f64,
}

impl MckpSelection {
    fn empty(classes: usize) -> Self {
        Self {
            choice: vec![None; classes],
            value: 0.0,
            weight: 0.0,
        }
    }
}

// Non-dominated items of one class, lightest first, values strictly increasing.
fn frontier(items: &[MckpItem], capacity: f64) -> Vec<(usize, MckpItem)> {
    let mut idx: Vec<usize> = (0..items.len())
        .filter(|&k| items[k].weight <= capacity && items[k].value > 0.0)
        .collect();
    idx.sort_by(|&a, &b| {
        items[a]
            .weight
            .total_cmp(&items[b].weight)
            .then(items[b].value.total_cmp(&items[a].value))
            .then(a.cmp(&b))
    });
    let mut out: Vec<(usize, MckpItem)> = Vec::new();
    for k in idx {
        if out.last().map_or(true, |(_, last)| items[k].value > last.value) {
            out.push((k, items[k]));
        }
    }
    out
}

// Upper concave hull through the origin, returned as increments.
fn hull_steps(front: &[(usize, MckpItem)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for &(_, it) in front {
        let p = (it.weight, it.value);
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b if it lies on or below segment a -> p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull.windows(2)
        .map(|w| (w[1].0 - w[0].0, w[1].1 - w[0].1))
        .collect()
}

/// Bounds from the linear relaxation: `(lower, upper)` with
/// `lower ≤ OPT ≤ upper` and `upper ≤ 2 lower`.
fn relaxation_bounds(fronts: &[Vec<(usize, MckpItem)>], capacity: f64) -> (f64, f64) {
    let mut steps: Vec<(f64, f64)> = fronts.iter().flat_map(|f| hull_steps(f)).collect();
    steps.sort_by(|a, b| (b.1 / b.0).total_cmp(&(a.1 / a.0)));
    let (mut room, mut whole, mut upper) = (capacity, 0.0, None);
    for (dw, dv) in steps {
        if dw <= room {
            room -= dw;
            whole += dv;
        } else {
            upper = Some(whole + dv * room / dw);
            break;
        }
    }
    let best_single = fronts
        .iter()
        .filter_map(|f| f.last().map(|(_, it)| it.value))
        .fold(0.0, f64::max);
    let lower = whole.max(best_single);
    (lower, upper.unwrap_or(whole).max(lower))
}

/// Selection with value at least `(1 - eps)` times optimal.
///
/// Values are rounded down to multiples of `eps · L / m`, where `m` counts
/// the classes with a usable item and `L` is a lower bound on the optimum from
/// the linear relaxation. The rounding loses less than `eps · L` in total.
pub fn solve_mckp(inst: &MckpInstance, eps: f64) -> MckpSelection {
    let nc = inst.classes.len();
    let capacity = inst.capacity.max(0.0);
    let fronts: Vec<Vec<(usize, MckpItem)>> =
        inst.classes.iter().map(|c| frontier(c, capacity)).collect();
    let active: Vec<usize> = (0..nc).filter(|&k| !fronts[k].is_empty()).collect();
    if active.is_empty() {
        return MckpSelection::empty(nc);
    }
    let (lower, upper) = relaxation_bounds(&fronts, capacity);
    let eps = eps.clamp(1e-9, 1.0);
    let unit = eps * lower / active.len() as f64;
    let scaled = |v: f64| (v / unit).floor() as usize;
    let top = (upper / unit).floor() as usize + 1;

    // best[s]: lightest weight reaching scaled value exactly s.
    let mut best = vec![f64::INFINITY; top + 1];
    best[0] = 0.0;
    let mut reach = 0;
    // pick[c][s]: item chosen in class c (offset by one) on the way to s.
    let mut pick: Vec<Vec<u32>> = Vec::with_capacity(active.len());
    let mut next = best.clone();
    for &c in &active {
        next.copy_from_slice(&best);
        let mut choice = vec![0u32; top + 1];
        let mut new_reach = reach;
        for (k, &(_, it)) in fronts[c].iter().enumerate() {
            let p = scaled(it.value);
            for s in 0..=reach {
                let w = best[s] + it.weight;
                if w > capacity || !w.is_finite() {
                    continue;
                }
                let t = (s + p).min(top);
                if w < next[t] {
                    next[t] = w;
                    choice[t] = k as u32 + 1;
                    new_reach = new_reach.max(t);
                }
            }
        }
        std::mem::swap(&mut best, &mut next);
        reach = new_reach;
        pick.push(choice);
    }

    let s_best = (0..=reach).rev().find(|&s| best[s].is_finite()).unwrap_or(0);
    let mut sel = MckpSelection::empty(nc);
    let mut s = s_best;
    for (a, &c) in active.iter().enumerate().rev() {
        let k = pick[a][s];
        if k > 0 {
            let (orig, it) = fronts[c][k as usize - 1];
            sel.choice[c] = Some(orig);
            sel.value += it.value;
            sel.weight += it.weight;
            s -= scaled(it.value).min(s);
        }
    }
    sel
}
