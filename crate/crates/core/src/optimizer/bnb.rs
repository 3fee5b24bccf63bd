//! Branch-and-bound over open sets with include/exclude branching.

use std::time::Instant;

use super::instance::{Instance, Objective};

const OPEN: u8 = 1;
const FREE: u8 = 2;

/// Lower bound on the objective of any completion that opens `k` more of
/// the `FREE` candidates on top of the `OPEN` ones.
///
/// Each demand cell costs at least its cheapest station among the open and
/// free candidates other than itself, unless the cell itself gets opened;
/// at most `k` free cells can take that reduction.
pub(crate) fn lower_bound(inst: &Instance, state: &[u8], k: usize) -> f64 {
    let n = inst.len();
    let pool: Vec<usize> = (0..n).filter(|&i| state[i] != 0).collect();
    let mut unopened = vec![f64::INFINITY; n];
    for &i in &pool {
        let row = inst.cost_row(i);
        for j in 0..n {
            if i != j && row[j] < unopened[j] {
                unopened[j] = row[j];
            }
        }
    }
    let mut sum = 0.0;
    let mut reductions = Vec::new();
    // (value if left closed, value if opened) for cells that may be opened
    let mut cells: Vec<(f64, Option<f64>)> = Vec::with_capacity(n);
    for j in 0..n {
        let own = inst.cost(j, j);
        match state[j] {
            OPEN => {
                let v = unopened[j].min(own);
                sum += v;
                cells.push((v, None));
            }
            // sole remaining candidate for itself
            FREE if unopened[j].is_infinite() => {
                sum += own;
                cells.push((own, None));
            }
            FREE => {
                let opened = unopened[j].min(own);
                sum += unopened[j];
                reductions.push(unopened[j] - opened);
                cells.push((unopened[j], Some(opened)));
            }
            _ => {
                sum += unopened[j];
                cells.push((unopened[j], None));
            }
        }
    }
    let avg_lb = || {
        let mut r = reductions.clone();
        r.sort_by(|a, b| b.total_cmp(a));
        let cut: f64 = r.iter().take(k).sum();
        ((sum - cut) / n as f64).max(0.0)
    };
    let max_lb = || {
        let mut order = cells.clone();
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut budget = k;
        let mut reduced: f64 = 0.0;
        for (closed, opened) in order {
            match opened {
                Some(o) if budget > 0 => {
                    reduced = reduced.max(o);
                    budget -= 1;
                }
                _ => return closed.max(reduced),
            }
        }
        reduced
    };
    match inst.objective {
        Objective::Avg => avg_lb(),
        Objective::Max => max_lb(),
        Objective::Weighted { alpha1, alpha2 } => alpha1 * avg_lb() + alpha2 * max_lb(),
    }
}

/// Root bound: fixed stations open, every other candidate free.
pub(crate) fn root_bound(inst: &Instance) -> f64 {
    let mut state = vec![FREE; inst.len()];
    for &f in &inst.fixed {
        state[f] = OPEN;
    }
    lower_bound(inst, &state, inst.open_count() - inst.fixed.len())
}

pub(crate) struct Outcome {
    pub open: Vec<usize>,
    pub objective: f64,
    pub nodes: u64,
    pub complete: bool,
}

/// Exhaustive search with pruning, seeded with an incumbent open set.
pub(crate) fn branch_and_bound(inst: &Instance, incumbent: &[usize], deadline: Instant) -> Outcome {
    let n = inst.len();
    let p = inst.open_count();
    let mut inc = incumbent.to_vec();
    inc.sort_unstable();
    let inc_obj = inst.evaluate(&inc).objective;

    let mut in_inc = vec![false; n];
    for &i in &inc {
        in_inc[i] = true;
    }
    let fixed: Vec<bool> = {
        let mut f = vec![false; n];
        for &i in &inst.fixed {
            f[i] = true;
        }
        f
    };
    // incumbent members first, so include-first descent revisits it early
    let mut order: Vec<usize> = (0..n).filter(|&i| !fixed[i] && in_inc[i]).collect();
    order.extend((0..n).filter(|&i| !fixed[i] && !in_inc[i]));

    let mut state = vec![FREE; n];
    for &f in &inst.fixed {
        state[f] = OPEN;
    }
    let mut search = Search {
        inst,
        p,
        order,
        best: inc,
        best_obj: inc_obj,
        nodes: 0,
        deadline,
        timed_out: false,
    };
    let opened = inst.fixed.len();
    search.dfs(0, opened, &mut state);
    Outcome {
        open: search.best,
        objective: search.best_obj,
        nodes: search.nodes,
        complete: !search.timed_out,
    }
}

struct Search<'a> {
    inst: &'a Instance,
    p: usize,
    order: Vec<usize>,
    best: Vec<usize>,
    best_obj: f64,
    nodes: u64,
    deadline: Instant,
    timed_out: bool,
}

impl Search<'_> {
    fn dfs(&mut self, pos: usize, opened: usize, state: &mut [u8]) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 512 == 0 && Instant::now() >= self.deadline {
            self.timed_out = true;
            return;
        }
        if opened == self.p {
            let open: Vec<usize> = (0..state.len()).filter(|&i| state[i] == OPEN).collect();
            let obj = self.inst.evaluate(&open).objective;
            if obj < self.best_obj || (obj == self.best_obj && open < self.best) {
                self.best_obj = obj;
                self.best = open;
            }
            return;
        }
        let remaining = self.order.len() - pos;
        if opened + remaining < self.p {
            return;
        }
        let lb = lower_bound(self.inst, state, self.p - opened);
        if lb >= self.best_obj - 1e-12 * self.best_obj.abs() {
            return;
        }
        let c = self.order[pos];
        state[c] = OPEN;
        self.dfs(pos + 1, opened + 1, state);
        state[c] = 0;
        self.dfs(pos + 1, opened, state);
        state[c] = FREE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::CellId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bound_never_exceeds_completions() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let n = rng.gen_range(2..=7);
            let cells = (0..n as i32).map(|q| CellId::new(q, 0)).collect();
            let base: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
            let cost = (0..n * n).map(|k| base[k % n] * rng.gen::<f64>()).collect();
            let obj = [Objective::Avg, Objective::Max, Objective::weighted()][rng.gen_range(0..3)];
            let inst = Instance::from_costs(cells, base, cost)
                .unwrap()
                .with_objective(obj);
            let p = rng.gen_range(1..=n);
            let state: Vec<u8> = (0..n).map(|_| rng.gen_range(0..3u8)).collect();
            let open: Vec<usize> = (0..n).filter(|&i| state[i] == OPEN).collect();
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == FREE).collect();
            if open.len() > p || open.len() + free.len() < p {
                continue;
            }
            let k = p - open.len();
            let lb = lower_bound(&inst, &state, k);
            // every completion
            for mask in 0u32..(1 << free.len()) {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let mut set = open.clone();
                set.extend(
                    free.iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &i)| i),
                );
                let v = inst.evaluate(&set).objective;
                assert!(lb <= v + 1e-12, "bound {lb} above completion {v}");
            }
        }
    }
}
