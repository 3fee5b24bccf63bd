//! Greedy opening followed by best-improvement swap search.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::instance::{Instance, Objective};

pub(crate) struct LocalOutcome {
    pub open: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    pub timed_out: bool,
}

/// Adds one candidate at a time, always the one that lowers the objective
/// most (ties to the smaller index), starting from the fixed stations.
pub(crate) fn greedy(inst: &Instance) -> Vec<usize> {
    greedy_from(inst, inst.fixed.clone())
}

/// Greedy completion of a partial open set.
pub(crate) fn greedy_from(inst: &Instance, mut open: Vec<usize>) -> Vec<usize> {
    let n = inst.len();
    let p = inst.open_count();
    let mut is_open = vec![false; n];
    let mut best_cost = vec![f64::INFINITY; n];
    for &f in &open {
        is_open[f] = true;
        for (j, &c) in inst.cost_row(f).iter().enumerate() {
            best_cost[j] = best_cost[j].min(c);
        }
    }
    while open.len() < p {
        let mut pick: Option<(f64, usize)> = None;
        for c in (0..n).filter(|&c| !is_open[c]) {
            let row = inst.cost_row(c);
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for j in 0..n {
                let v = best_cost[j].min(row[j]);
                sum += v;
                max = max.max(v);
            }
            let obj = inst.objective.combine(sum / n as f64, max);
            if pick.map_or(true, |(b, _)| obj < b) {
                pick = Some((obj, c));
            }
        }
        let (_, c) = pick.expect("a closed candidate remains");
        is_open[c] = true;
        open.push(c);
        for (j, &v) in inst.cost_row(c).iter().enumerate() {
            best_cost[j] = best_cost[j].min(v);
        }
    }
    open.sort_unstable();
    open
}

/// Fixed stations plus a uniform sample of the free candidates.
pub(crate) fn random_start(inst: &Instance, seed: u64) -> Vec<usize> {
    let n = inst.len();
    let mut is_fixed = vec![false; n];
    for &f in &inst.fixed {
        is_fixed[f] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    let k = inst.open_count() - inst.fixed.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut open: Vec<usize> = rand::seq::index::sample(&mut rng, free.len(), k)
        .into_iter()
        .map(|i| free[i])
        .collect();
    open.extend_from_slice(&inst.fixed);
    open.sort_unstable();
    open
}

/// Nearest and second-nearest open station per demand cell.
struct Nearest {
    d1: Vec<f64>,
    i1: Vec<usize>,
    d2: Vec<f64>,
}

impl Nearest {
    fn compute(inst: &Instance, open: &[usize]) -> Self {
        let n = inst.len();
        let mut d1 = vec![f64::INFINITY; n];
        let mut i1 = vec![usize::MAX; n];
        let mut d2 = vec![f64::INFINITY; n];
        for &i in open {
            for (j, &c) in inst.cost_row(i).iter().enumerate() {
                if c < d1[j] {
                    d2[j] = d1[j];
                    d1[j] = c;
                    i1[j] = i;
                } else if c < d2[j] {
                    d2[j] = c;
                }
            }
        }
        Nearest { d1, i1, d2 }
    }
}

/// Best-improvement swap search until no swap improves the objective.
pub(crate) fn local_search(inst: &Instance, start: Vec<usize>, deadline: Instant) -> LocalOutcome {
    let mut open = start;
    open.sort_unstable();
    let mut iterations = 0;
    let mut timed_out = false;
    if inst.serve_other {
        return generic_search(inst, open, deadline);
    }
    loop {
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        let near = Nearest::compute(inst, &open);
        let swap = match inst.objective {
            Objective::Avg => best_swap_avg(inst, &open, &near),
            _ => best_swap_full(inst, &open, &near),
        };
        match swap {
            Some((out, inn)) => {
                let k = open.iter().position(|&o| o == out).unwrap();
                open[k] = inn;
                open.sort_unstable();
                iterations += 1;
            }
            None => break,
        }
    }
    let objective = inst.evaluate(&open).objective;
    LocalOutcome {
        open,
        objective,
        iterations,
        timed_out,
    }
}

fn removable(inst: &Instance, open: &[usize]) -> Vec<bool> {
    let mut r = vec![false; inst.len()];
    for &o in open {
        r[o] = true;
    }
    for &f in &inst.fixed {
        r[f] = false;
    }
    r
}

fn threshold(total: f64) -> f64 {
    -1e-12 * (1.0 + total.abs())
}

/// Fast interchange for the mean objective: for each entering candidate the
/// loss of removing every open station is accumulated in one pass.
fn best_swap_avg(inst: &Instance, open: &[usize], near: &Nearest) -> Option<(usize, usize)> {
    let n = inst.len();
    let can_remove = removable(inst, open);
    let mut is_open = vec![false; n];
    for &o in open {
        is_open[o] = true;
    }
    let total: f64 = near.d1.iter().sum();
    let mut best: Option<(f64, usize, usize)> = None;
    let mut loss = vec![0.0; n];
    for c in (0..n).filter(|&c| !is_open[c]) {
        for &o in open {
            loss[o] = 0.0;
        }
        let row = inst.cost_row(c);
        let mut gain = 0.0;
        for u in 0..n {
            let dc = row[u];
            if dc < near.d1[u] {
                gain += near.d1[u] - dc;
            } else {
                loss[near.i1[u]] += dc.min(near.d2[u]) - near.d1[u];
            }
        }
        for &r in open {
            if !can_remove[r] {
                continue;
            }
            let delta = loss[r] - gain;
            if best.map_or(true, |(b, _, _)| delta < b) {
                best = Some((delta, r, c));
            }
        }
    }
    match best {
        Some((delta, r, c)) if delta < threshold(total) => Some((r, c)),
        _ => None,
    }
}

/// Swap search for objectives involving the maximum: each swap is scored in
/// one pass over the demand cells, stopping early once it cannot win.
fn best_swap_full(inst: &Instance, open: &[usize], near: &Nearest) -> Option<(usize, usize)> {
    let n = inst.len();
    let can_remove = removable(inst, open);
    let mut is_open = vec![false; n];
    for &o in open {
        is_open[o] = true;
    }
    let sum0: f64 = near.d1.iter().sum();
    let max0 = near.d1.iter().copied().fold(0.0, f64::max);
    let current = inst.objective.combine(sum0 / n as f64, max0);
    let (a1, a2) = match inst.objective {
        Objective::Avg => (1.0, 0.0),
        Objective::Max => (0.0, 1.0),
        Objective::Weighted { alpha1, alpha2 } => (alpha1, alpha2),
    };
    let nf = n as f64;
    let mut best = current + threshold(current);
    let mut pick = None;
    for c in (0..n).filter(|&c| !is_open[c]) {
        let row = inst.cost_row(c);
        for &r in open {
            if !can_remove[r] {
                continue;
            }
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            let mut beaten = false;
            for u in 0..n {
                let keep = if near.i1[u] == r {
                    near.d2[u]
                } else {
                    near.d1[u]
                };
                let v = keep.min(row[u]);
                sum += v;
                max = max.max(v);
                if a1 * sum / nf + a2 * max >= best {
                    beaten = true;
                    break;
                }
            }
            if beaten {
                continue;
            }
            let obj = a1 * sum / nf + a2 * max;
            if obj < best {
                best = obj;
                pick = Some((r, c));
            }
        }
    }
    pick
}

/// Swap search that re-evaluates every neighbor from scratch; used when the
/// assignment is not simply nearest-station.
fn generic_search(inst: &Instance, mut open: Vec<usize>, deadline: Instant) -> LocalOutcome {
    let n = inst.len();
    let mut cur = inst.evaluate(&open).objective;
    let mut iterations = 0;
    let mut timed_out = false;
    loop {
        if Instant::now() >= deadline {
            timed_out = true;
            break;
        }
        let can_remove = removable(inst, &open);
        let mut best = cur + threshold(cur);
        let mut pick = None;
        for c in (0..n).filter(|c| !open.contains(c)) {
            for r in open.iter().copied().filter(|&r| can_remove[r]) {
                let mut trial: Vec<usize> =
                    open.iter().map(|&o| if o == r { c } else { o }).collect();
                trial.sort_unstable();
                let obj = inst.evaluate(&trial).objective;
                if obj < best {
                    best = obj;
                    pick = Some(trial);
                }
            }
        }
        match pick {
            Some(t) => {
                open = t;
                cur = best;
                iterations += 1;
            }
            None => break,
        }
    }
    LocalOutcome {
        objective: inst.evaluate(&open).objective,
        open,
        iterations,
        timed_out,
    }
}
