use std::time::Instant;

use super::instance::Instance;
use super::solve::{OptimizationResult, SolverKind, Status};
use crate::error::{Error, Result};

pub const ORACLE_BUDGET: f64 = 1e6;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exhaustive enumeration of every admissible open set. Assignment is
/// recomputed here independently of the solver.
pub fn brute_force_oracle(inst: &Instance) -> Result<OptimizationResult> {
    inst.validate()?;
    let started = Instant::now();
    let n = inst.len();
    let mut is_fixed = vec![false; n];
    for &f in &inst.fixed {
        is_fixed[f] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
    let k = inst.open_count() - inst.fixed.len();
    let combos = binomial(free.len(), k).round();
    if combos > ORACLE_BUDGET {
        return Err(Error::Budget {
            combinations: combos,
            budget: ORACLE_BUDGET,
        });
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut pick: Vec<usize> = (0..k).collect();
    let mut count = 0u64;
    loop {
        let mut open: Vec<usize> = inst.fixed.clone();
        open.extend(pick.iter().map(|&p| free[p]));
        open.sort_unstable();
        let obj = if inst.serve_other {
            inst.evaluate(&open).objective
        } else {
            let mut sum = 0.0;
            let mut max: f64 = 0.0;
            for j in 0..n {
                let c = open
                    .iter()
                    .map(|&i| inst.cost(i, j))
                    .fold(f64::INFINITY, f64::min);
                sum += c;
                max = max.max(c);
            }
            inst.objective.combine(sum / n as f64, max)
        };
        count += 1;
        if best.as_ref().map_or(true, |(b, _)| obj < *b) {
            best = Some((obj, open));
        }
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                let (_, open) = best.expect("at least one combination");
                return Ok(OptimizationResult::from_open(
                    inst,
                    open,
                    Status::Optimal,
                    SolverKind::Enumeration,
                    f64::NAN,
                    count,
                    started,
                ))
                .map(|mut r| {
                    r.lower_bound = r.objective;
                    r
                });
            }
            i -= 1;
            if pick[i] < free.len() - k + i {
                pick[i] += 1;
                for t in i + 1..k {
                    pick[t] = pick[t - 1] + 1;
                }
                break;
            }
        }
    }
}
