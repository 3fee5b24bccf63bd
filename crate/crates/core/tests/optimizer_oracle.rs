mod common;

use common::{planar_instance, random_instance};
use hazgrid::optimizer::{
    brute_force_oracle, solve, solve_chain, solve_warm, Instance, Objective, OptimizationResult,
    SolverConfig,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBJECTIVES: [Objective; 3] = [
    Objective::Avg,
    Objective::Max,
    Objective::Weighted {
        alpha1: 0.5,
        alpha2: 0.5,
    },
];

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn check_contracts(inst: &Instance, r: &OptimizationResult) {
    let n = inst.len();
    assert_eq!(r.open.len(), inst.open_count());
    for f in &inst.fixed {
        assert!(r.open.contains(f));
    }
    assert_eq!(r.assignment.len(), n);
    for j in 0..n {
        assert!(
            r.open.binary_search(&r.assignment[j]).is_ok(),
            "assigned to a closed cell"
        );
        if !inst.serve_other {
            let best = r
                .open
                .iter()
                .map(|&i| inst.cost(i, j))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(inst.cost(r.assignment[j], j), best);
        }
    }
    let avg = (0..n).map(|j| inst.cost(r.assignment[j], j)).sum::<f64>() / n as f64;
    let max = (0..n)
        .map(|j| inst.cost(r.assignment[j], j))
        .fold(0.0, f64::max);
    assert!(close(inst.objective.combine(avg, max), r.objective));
}

#[test]
fn exact_solver_matches_enumeration_on_ten_cells() {
    let cfg = SolverConfig::default();
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_instance(&mut rng, 10);
        for obj in OBJECTIVES {
            let inst = base
                .clone()
                .with_objective(obj)
                .with_stations(rng.gen_range(1..=3));
            let r = solve(&inst, &cfg).unwrap();
            let o = brute_force_oracle(&inst).unwrap();
            assert!(
                close(r.objective, o.objective),
                "seed {seed} {obj:?}: {} vs {}",
                r.objective,
                o.objective
            );
            check_contracts(&inst, &r);
        }
    }
}

#[test]
fn add_mode_matches_enumeration() {
    let cfg = SolverConfig::default();
    for seed in 0..60 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let n = rng.gen_range(4..=12);
        let e = rng.gen_range(1..=2usize.min(n - 1));
        let fixed = sample(&mut rng, n, e).into_vec();
        let delta = rng.gen_range(0..=(n - e).min(3));
        let obj = OBJECTIVES[rng.gen_range(0..3)];
        let inst = planar_instance(&mut rng, n)
            .with_objective(obj)
            .with_fixed(&fixed, delta);
        let r = solve(&inst, &cfg).unwrap();
        let o = brute_force_oracle(&inst).unwrap();
        assert!(close(r.objective, o.objective));
        check_contracts(&inst, &r);
    }
}

#[test]
fn serve_other_solver_matches_enumeration() {
    let cfg = SolverConfig::default();
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let n = rng.gen_range(3..=8);
        let obj = OBJECTIVES[rng.gen_range(0..3)];
        let inst = random_instance(&mut rng, n)
            .with_objective(obj)
            .with_stations(rng.gen_range(1..=3.min(n)))
            .with_serve_other(true);
        let r = solve(&inst, &cfg).unwrap();
        let o = brute_force_oracle(&inst).unwrap();
        assert!(close(r.objective, o.objective));
        check_contracts(&inst, &r);
        for &i in &r.open {
            assert!((0..n).any(|j| j != i && r.assignment[j] == i));
        }
    }
}

#[test]
fn warm_and_cold_objectives_agree() {
    let cfg = SolverConfig::default();
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(77 + seed);
        let n = rng.gen_range(5..=14);
        let inst = planar_instance(&mut rng, n).with_stations(rng.gen_range(1..=4));
        let chain = solve_chain(&inst, &cfg).unwrap();
        for (k, obj) in OBJECTIVES.iter().enumerate() {
            let cold = solve(&inst.clone().with_objective(*obj), &cfg).unwrap();
            assert!(
                close(chain[k].objective, cold.objective),
                "seed {seed} {obj:?}"
            );
        }
        // an arbitrary warm start gives the same optimum
        let warm: Vec<usize> = sample(&mut rng, n, inst.open_count()).into_vec();
        let w = solve_warm(&inst, &cfg, &warm).unwrap();
        assert!(close(w.objective, chain[0].objective));
    }
}

#[test]
fn relocation_never_worse_than_current() {
    for exact_threshold in [60, 0] {
        let cfg = SolverConfig {
            exact_threshold,
            ..SolverConfig::default()
        };
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
            let n = rng.gen_range(6..=40);
            let s = rng.gen_range(1..=4);
            let current = sample(&mut rng, n, s).into_vec();
            let inst = planar_instance(&mut rng, n)
                .with_stations(s)
                .with_current(&current);
            let r = solve(&inst, &cfg).unwrap();
            let as_is = inst.evaluate(&current).objective;
            assert!(r.objective <= as_is + 1e-12);
        }
    }
}

#[test]
fn scaling_base_keeps_the_avg_argmin() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let n = 12;
        let inst = planar_instance(&mut rng, n).with_stations(3);
        let k = rng.gen_range(0.1..10.0);
        let cells = inst.cells().to_vec();
        let base: Vec<f64> = inst.base().iter().map(|b| b * k).collect();
        let cost: Vec<f64> = (0..n * n).map(|x| inst.cost(x / n, x % n) * k).collect();
        let scaled = Instance::from_costs(cells, base, cost)
            .unwrap()
            .with_stations(3);
        let a = brute_force_oracle(&inst).unwrap();
        let b = brute_force_oracle(&scaled).unwrap();
        assert!((b.objective - k * a.objective).abs() < 1e-9 * (1.0 + b.objective));
        // the original argmin stays optimal after scaling
        assert!(
            (scaled.evaluate(&a.open).objective - b.objective).abs() < 1e-9 * (1.0 + b.objective)
        );
    }
}

#[test]
fn heuristic_path_contracts_on_larger_instances() {
    let cfg = SolverConfig {
        exact_threshold: 0,
        ..SolverConfig::default()
    };
    for seed in 0..6 {
        let mut rng = ChaCha8Rng::seed_from_u64(40 + seed);
        let n = rng.gen_range(80..=160);
        let obj = OBJECTIVES[seed as usize % 3];
        let inst = planar_instance(&mut rng, n)
            .with_objective(obj)
            .with_stations(rng.gen_range(2..=12));
        let r = solve(&inst, &cfg).unwrap();
        check_contracts(&inst, &r);
        assert!(r.lower_bound <= r.objective + 1e-12);
        // deterministic across runs
        let again = solve(&inst, &cfg).unwrap();
        assert_eq!(again.open, r.open);
    }
}

#[test]
fn heuristic_usually_finds_the_optimum_on_small_instances() {
    let cfg = SolverConfig {
        exact_threshold: 0,
        ..SolverConfig::default()
    };
    let mut hits = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = planar_instance(&mut rng, 12).with_stations(3);
        let r = solve(&inst, &cfg).unwrap();
        let o = brute_force_oracle(&inst).unwrap();
        assert!(r.objective >= o.objective - 1e-12);
        if close(r.objective, o.objective) {
            hits += 1;
        }
    }
    assert!(hits >= 45, "multi-start search optimal on {hits}/50");
}
