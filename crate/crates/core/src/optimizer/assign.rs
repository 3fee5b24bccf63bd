//! Optimal assignment when every open station must also serve at least one
//! cell other than its own.
//!
//! Given the open set, some cell `w_i ≠ i` per station acts as its witness;
//! all remaining cells take their nearest station. Witnesses are distinct,
//! so the cheapest choice is a rectangular assignment problem over the
//! extra cost `c(i, w) − nearest(w)`.

use super::instance::{Evaluation, Instance, Objective};

pub(crate) fn evaluate_serve_other(inst: &Instance, open: &[usize]) -> Evaluation {
    let n = inst.len();
    let (nearest_a, nearest_c) = inst.nearest(open);
    let allowed = |k: usize, j: usize, limit: f64| j != open[k] && inst.cost(open[k], j) <= limit;

    let solve_with_limit = |limit: f64| -> Option<Vec<usize>> {
        let big = big_m(inst);
        let w: Vec<Vec<f64>> = (0..open.len())
            .map(|k| {
                (0..n)
                    .map(|j| {
                        if allowed(k, j, limit) {
                            inst.cost(open[k], j) - nearest_c[j]
                        } else {
                            big
                        }
                    })
                    .collect()
            })
            .collect();
        let cols = hungarian(&w);
        cols.iter()
            .enumerate()
            .all(|(k, &j)| allowed(k, j, limit))
            .then_some(cols)
    };

    let apply = |cols: &[usize]| {
        let mut a = nearest_a.clone();
        let mut c = nearest_c.clone();
        for (k, &j) in cols.iter().enumerate() {
            a[j] = open[k];
            c[j] = inst.cost(open[k], j);
        }
        inst.finish(a, c)
    };

    let floor = nearest_c.iter().copied().fold(0.0, f64::max);
    let mut limits: Vec<f64> = (0..open.len())
        .flat_map(|k| (0..n).filter(move |&j| j != open[k]).map(move |j| (k, j)))
        .map(|(k, j)| inst.cost(open[k], j))
        .filter(|&c| c >= floor)
        .collect();
    limits.push(floor);
    limits.sort_by(f64::total_cmp);
    limits.dedup();

    match inst.objective {
        Objective::Avg => apply(&solve_with_limit(f64::INFINITY).expect("derangement exists")),
        Objective::Max => {
            // smallest feasible limit
            let (mut lo, mut hi) = (0usize, limits.len() - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if has_matching(open, n, |k, j| allowed(k, j, limits[mid])) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            apply(&solve_with_limit(limits[lo]).expect("feasible limit"))
        }
        Objective::Weighted { .. } => {
            let mut best: Option<Evaluation> = None;
            for &limit in &limits {
                if let Some(cols) = solve_with_limit(limit) {
                    let e = apply(&cols);
                    if best.as_ref().map_or(true, |b| e.objective < b.objective) {
                        best = Some(e);
                    }
                }
            }
            best.expect("unrestricted limit is feasible")
        }
    }
}

fn big_m(inst: &Instance) -> f64 {
    let n = inst.len();
    let max = (0..n)
        .flat_map(|i| inst.cost_row(i).iter().copied())
        .fold(0.0, f64::max);
    (max + 1.0) * (n as f64 + 1.0) * 1e3
}

/// Minimum-cost assignment of every row to a distinct column
/// (rows ≤ columns). Returns the column chosen for each row.
pub(crate) fn hungarian(a: &[Vec<f64>]) -> Vec<usize> {
    let rows = a.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = a[0].len();
    assert!(rows <= cols, "hungarian needs rows <= columns");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Whether every open station can be matched to a distinct allowed cell.
fn has_matching(open: &[usize], n: usize, allowed: impl Fn(usize, usize) -> bool) -> bool {
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        k: usize,
        n: usize,
        allowed: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if allowed(k, j) && !seen[j] {
                seen[j] = true;
                if owner[j].map_or(true, |o| augment(o, n, allowed, seen, owner)) {
                    owner[j] = Some(k);
                    return true;
                }
            }
        }
        false
    }
    (0..open.len()).all(|k| {
        let mut seen = vec![false; n];
        augment(k, n, &allowed, &mut seen, &mut owner)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::CellId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hungarian_small() {
        let a = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0]];
        let cols = hungarian(&a);
        assert_eq!(cols, vec![1, 0]);
    }

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Instance {
        let cells = (0..n as i32).map(|q| CellId::new(q, 0)).collect();
        let base: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let cost = (0..n * n)
            .map(|k| {
                if k / n == k % n {
                    0.0
                } else {
                    base[k % n] * rng.gen::<f64>()
                }
            })
            .collect();
        Instance::from_costs(cells, base, cost)
            .unwrap()
            .with_serve_other(true)
    }

    /// Every assignment of cells to open stations, keeping those where each
    /// station serves a foreign cell.
    fn enumerate(inst: &Instance, open: &[usize]) -> f64 {
        let n = inst.len();
        let p = open.len();
        let mut best = f64::INFINITY;
        let mut digits = vec![0usize; n];
        loop {
            let ok = (0..p).all(|k| (0..n).any(|j| digits[j] == k && j != open[k]));
            if ok {
                let costs: Vec<f64> = (0..n).map(|j| inst.cost(open[digits[j]], j)).collect();
                let avg = costs.iter().sum::<f64>() / n as f64;
                let max = costs.iter().copied().fold(0.0, f64::max);
                best = best.min(inst.objective.combine(avg, max));
            }
            let mut pos = 0;
            loop {
                if pos == n {
                    return best;
                }
                digits[pos] += 1;
                if digits[pos] < p {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }

    #[test]
    fn matches_assignment_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..60 {
            let n = rng.gen_range(2..=7);
            let p = rng.gen_range(1..=n.min(3));
            let open: Vec<usize> = rand::seq::index::sample(&mut rng, n, p).into_vec();
            let mut open = open;
            open.sort_unstable();
            for obj in [Objective::Avg, Objective::Max, Objective::weighted()] {
                let inst = random(&mut rng, n).with_objective(obj);
                let e = inst.evaluate(&open);
                let oracle = enumerate(&inst, &open);
                assert!(
                    (e.objective - oracle).abs() < 1e-9,
                    "{obj:?} {} vs {oracle}",
                    e.objective
                );
                for &i in &open {
                    assert!((0..n).any(|j| j != i && e.assignment[j] == i));
                }
            }
        }
    }

    #[test]
    fn all_open_forces_a_derangement() {
        let cells = vec![CellId::new(0, 0), CellId::new(1, 0)];
        let inst = Instance::from_costs(cells, vec![1.0, 1.0], vec![0.0, 0.3, 0.4, 0.0])
            .unwrap()
            .with_serve_other(true);
        let e = inst.evaluate(&[0, 1]);
        assert_eq!(e.assignment, vec![1, 0]);
        assert!((e.avg - 0.35).abs() < 1e-15);
    }
}
