//! Acceptance criteria 1-7. Runs without the libtest harness so every
//! criterion prints exactly one PASS or FAIL line; the process exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{floyd_warshall, planar_instance, random_digraph, random_instance};
use hazgrid::hexgrid::{
    aggregate_points, aggregate_polygons, aggregate_polylines, aggregate_raster, CellId, HexGrid,
    LayerGrid, RasterStat,
};
use hazgrid::ingest::{
    synth_region, AsciiGrid, Blob, HazardPattern, PointRecord, Polygon, PolygonFeature, SynthSpec,
};
use hazgrid::optimizer::{
    add_stations, brute_force_oracle, marginal_sweep, solve, solve_warm, Instance, Objective,
    SolverConfig,
};
use hazgrid::region::{Region, RegionConfig};
use hazgrid::riskmodel::{features, risk_field, Scenario, TransformSpec, STTFS};
use hazgrid::scaling::{
    collapse_deviation, homothetic_pair, optimal_distance_curve, optimal_ri_curve,
    phase_averaged_beta,
};
use hazgrid::streetnet::{shortest_times_from, Reach, RoadGraph, SttfsLayer, UNREACHABLE};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const OBJECTIVES: [Objective; 3] = [
    Objective::Avg,
    Objective::Max,
    Objective::Weighted {
        alpha1: 0.5,
        alpha2: 0.5,
    },
];

fn solver_exactness() -> Outcome {
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for k in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(10_000 + k);
        let n = rng.gen_range(4..=12);
        let s = rng.gen_range(1..=3);
        let inst = random_instance(&mut rng, n)
            .with_objective(OBJECTIVES[k as usize % 3])
            .with_stations(s);
        let got = solve(&inst, &cfg).map_err(|e| e.to_string())?;
        let want = brute_force_oracle(&inst).map_err(|e| e.to_string())?;
        let diff = (got.objective - want.objective).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || {
            format!(
                "instance {k}: {} vs oracle {}",
                got.objective, want.objective
            )
        })?;
    }
    Ok(format!("200 instances, max |diff| {worst:e}"))
}

fn dijkstra_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for trial in 0..50 {
        let n = rng.gen_range(2..=200);
        let m = rng.gen_range(0..n * 4);
        let (nodes, edges) = random_digraph(&mut rng, n, m);
        let graph = RoadGraph::new(&nodes, &edges).map_err(|e| e.to_string())?;
        let fw = floyd_warshall(&graph, &edges);
        let k = rng.gen_range(1..=n.min(8));
        let sources: Vec<i64> = (0..k).map(|_| nodes[rng.gen_range(0..n)].id).collect();
        let idx: Vec<usize> = sources
            .iter()
            .map(|s| graph.index_of(*s).unwrap())
            .collect();
        let field = shortest_times_from(&graph, &sources).map_err(|e| e.to_string())?;
        for v in 0..n {
            let best = idx.iter().map(|&s| fw[s][v]).min().unwrap_or(UNREACHABLE);
            ensure(field.raw_ms()[v] == best, || {
                format!("graph {trial} node {v}: {} vs {best}", field.raw_ms()[v])
            })?;
        }
    }
    Ok("50 graphs exact".into())
}

fn graded_spec() -> SynthSpec {
    SynthSpec {
        blobs: vec![Blob {
            x: 0.5,
            y: 0.5,
            sigma: 0.25,
            weight: 1.0,
        }],
        background_share: 0.05,
        ..SynthSpec::default()
    }
}

fn scaling_law() -> Outcome {
    let bundle = synth_region(1, 50, 50, &graded_spec()).map_err(|e| e.to_string())?;
    let region = Region::build(&bundle, RegionConfig::default()).map_err(|e| e.to_string())?;
    let curve =
        optimal_distance_curve(&region, &[10, 20, 30, 40, 50, 60], &SolverConfig::default())
            .map_err(|e| e.to_string())?;
    let pooled = curve.pooled_facilities(&region.layers);
    let fit = phase_averaged_beta(&region.layers, &pooled, 2000.0).map_err(|e| e.to_string())?;
    ensure((0.58..=0.74).contains(&fit.beta), || {
        format!("beta {:.3} outside [0.58, 0.74]", fit.beta)
    })?;
    Ok(format!(
        "beta {:.3} over {} cells",
        fit.beta,
        region.layers.len()
    ))
}

fn curve_collapse() -> Outcome {
    let cfg = SolverConfig::default();
    let spec = graded_spec();
    let (small, big) = homothetic_pair(3, 26, 26, &spec, 2).map_err(|e| e.to_string())?;
    let build = |b| Region::build(b, RegionConfig::default()).map_err(|e| e.to_string());
    let (rs, rb) = (build(&small)?, build(&big)?);
    let n_small = [2usize, 3, 4, 6, 8, 10, 12, 15];
    let n_big: Vec<usize> = n_small.iter().map(|n| 4 * n).collect();
    let cs = optimal_distance_curve(&rs, &n_small, &cfg).map_err(|e| e.to_string())?;
    let cb = optimal_distance_curve(&rb, &n_big, &cfg).map_err(|e| e.to_string())?;
    let dist = collapse_deviation(&[cs, cb]).map_err(|e| e.to_string())?;

    let pattern = |hazard| SynthSpec {
        hazard,
        total_population: 400_000.0,
        stations: 16,
        ..spec.clone()
    };
    let pa =
        synth_region(3, 51, 51, &pattern(HazardPattern::Periphery)).map_err(|e| e.to_string())?;
    let pb = synth_region(3, 51, 51, &pattern(HazardPattern::Core)).map_err(|e| e.to_string())?;
    let scenario = Scenario::default();
    let ra = optimal_ri_curve(&build(&pa)?, &scenario, &n_big, &cfg).map_err(|e| e.to_string())?;
    let rb = optimal_ri_curve(&build(&pb)?, &scenario, &n_big, &cfg).map_err(|e| e.to_string())?;
    let ri = collapse_deviation(&[ra, rb]).map_err(|e| e.to_string())?;
    ensure(dist < 0.10, || {
        format!("distance deviation {dist:.4} >= 0.10")
    })?;
    ensure(ri > dist, || {
        format!("RI deviation {ri:.4} not above distance {dist:.4}")
    })?;
    Ok(format!("distance {dist:.4}, RI {ri:.4}"))
}

fn rel_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * a.abs().max(b.abs()).max(1e-300)
}

/// Shoelace area of a lon/lat ring in the grid's projection.
fn projected_area(grid: &HexGrid, ring: &[[f64; 2]]) -> f64 {
    let xy: Vec<(f64, f64)> = ring
        .iter()
        .map(|p| grid.project(p[1], p[0]).unwrap())
        .collect();
    let mut twice = 0.0;
    for i in 0..xy.len() {
        let (a, b) = (xy[i], xy[(i + 1) % xy.len()]);
        twice += a.0 * b.1 - b.0 * a.1;
    }
    twice.abs() / 2.0
}

fn conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for k in 0..100 {
        let lat0 = rng.gen_range(-50.0..50.0);
        let lon0 = rng.gen_range(-170.0..170.0);
        let span = rng.gen_range(0.01..0.08);
        let edge = rng.gen_range(150.0..900.0);
        let grid = HexGrid::covering(&[(lat0, lon0), (lat0 + span, lon0 + span)], edge)
            .map_err(|e| e.to_string())?;
        let mut inside = || {
            (
                lat0 + rng.gen::<f64>() * span,
                lon0 + rng.gen::<f64>() * span,
            )
        };

        let points: Vec<PointRecord> = (0..200)
            .map(|_| {
                let (lat, lon) = inside();
                PointRecord {
                    lat,
                    lon,
                    value: Some((lat * 1e4).fract().abs() * 100.0),
                }
            })
            .collect();
        let want: f64 = points.iter().map(|p| p.value.unwrap()).sum();
        let got = aggregate_points(&grid, &points, true)
            .map_err(|e| e.to_string())?
            .total();
        ensure(rel_close(got, want), || {
            format!("fixture {k}: points {got} vs {want}")
        })?;

        let (ncols, nrows) = (40, 40);
        let cellsize = span / 40.0;
        let values: Vec<f64> = (0..ncols * nrows)
            .map(|i| ((i * 37) % 11) as f64 + 0.25)
            .collect();
        let raster = AsciiGrid {
            ncols,
            nrows,
            xllcorner: lon0,
            yllcorner: lat0,
            cellsize,
            nodata: -9999.0,
            values,
        };
        let want: f64 = raster.values.iter().sum();
        let got = aggregate_raster(&grid, &raster, RasterStat::Sum)
            .map_err(|e| e.to_string())?
            .total();
        ensure(rel_close(got, want), || {
            format!("fixture {k}: raster {got} vs {want}")
        })?;

        let lines: Vec<Vec<(f64, f64)>> = (0..20)
            .map(|_| (0..4).map(|_| inside()).collect())
            .collect();
        let want: f64 = lines
            .iter()
            .flat_map(|l| l.windows(2))
            .map(|w| {
                let a = grid.project(w[0].0, w[0].1).unwrap();
                let b = grid.project(w[1].0, w[1].1).unwrap();
                (a.0 - b.0).hypot(a.1 - b.1)
            })
            .sum();
        let got = aggregate_polylines(&grid, &lines)
            .map_err(|e| e.to_string())?
            .total();
        ensure(rel_close(got, want), || {
            format!("fixture {k}: polylines {got} vs {want}")
        })?;

        let mut mass = 0.0;
        let mut area = 0.0;
        let features: Vec<PolygonFeature> = (0..6)
            .map(|i| {
                // random triangle, counter-clockwise
                let mut ring: Vec<[f64; 2]> = (0..3)
                    .map(|_| {
                        let (la, lo) = inside();
                        [lo, la]
                    })
                    .collect();
                let cross = (ring[1][0] - ring[0][0]) * (ring[2][1] - ring[0][1])
                    - (ring[1][1] - ring[0][1]) * (ring[2][0] - ring[0][0]);
                if cross < 0.0 {
                    ring.swap(1, 2);
                }
                let pop = 10.0 + i as f64 * 17.0;
                mass += pop;
                area += projected_area(&grid, &ring);
                ring.push(ring[0]);
                PolygonFeature {
                    id: Some(i.to_string()),
                    parts: vec![Polygon {
                        exterior: ring,
                        holes: vec![],
                    }],
                    properties: [("POP".to_string(), serde_json::json!(pop))]
                        .into_iter()
                        .collect(),
                }
            })
            .collect();
        let got = aggregate_polygons(&grid, &features, Some("POP"))
            .map_err(|e| e.to_string())?
            .total();
        ensure(rel_close(got, mass), || {
            format!("fixture {k}: polygon mass {got} vs {mass}")
        })?;
        let got = aggregate_polygons(&grid, &features, None)
            .map_err(|e| e.to_string())?
            .total();
        ensure(rel_close(got, area), || {
            format!("fixture {k}: polygon area {got} vs {area}")
        })?;
    }
    Ok("100 fixtures x 5 aggregators".into())
}

fn check_result(inst: &Instance, r: &hazgrid::optimizer::OptimizationResult) -> Result<(), String> {
    let n = inst.len();
    ensure(r.assignment.len() == n, || {
        "one assignment per demand cell".into()
    })?;
    ensure(r.open.len() == inst.open_count(), || {
        format!("{} open, {} required", r.open.len(), inst.open_count())
    })?;
    for f in &inst.fixed {
        ensure(r.open.contains(f), || format!("fixed station {f} closed"))?;
    }
    for (j, &i) in r.assignment.iter().enumerate() {
        ensure(r.open.binary_search(&i).is_ok(), || {
            format!("cell {j} assigned to closed {i}")
        })?;
    }
    Ok(())
}

fn model_contracts() -> Outcome {
    let exact = SolverConfig::default();
    let heuristic = SolverConfig {
        exact_threshold: 0,
        ..SolverConfig::default()
    };
    let mut checked = 0;
    for k in 0..60u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + k);
        let n = rng.gen_range(6..=30);
        let s = rng.gen_range(1..=4);
        let obj = OBJECTIVES[k as usize % 3];
        let current = sample(&mut rng, n, s).into_vec();
        let inst = planar_instance(&mut rng, n)
            .with_objective(obj)
            .with_stations(s)
            .with_current(&current);
        let as_is = inst.evaluate(&current).objective;
        for cfg in [&exact, &heuristic] {
            let r = solve(&inst, cfg).map_err(|e| e.to_string())?;
            check_result(&inst, &r)?;
            ensure(r.objective <= as_is + 1e-12, || {
                format!("instance {k}: relocation worse than current")
            })?;
        }
        let cold = solve(&inst, &exact).map_err(|e| e.to_string())?;
        let warm = solve_warm(&inst, &exact, &sample(&mut rng, n, s).into_vec())
            .map_err(|e| e.to_string())?;
        ensure((warm.objective - cold.objective).abs() <= 1e-12, || {
            format!(
                "instance {k}: warm {} cold {}",
                warm.objective, cold.objective
            )
        })?;

        let e = rng.gen_range(1..=2);
        let fixed = sample(&mut rng, n, e).into_vec();
        let delta_max = 3.min(n - fixed.len());
        let add = inst.clone().with_fixed(&fixed, 0);
        let curve = marginal_sweep(&add, delta_max, 0.01, &exact).map_err(|e| e.to_string())?;
        let mut prev = f64::INFINITY;
        for d in 0..=delta_max {
            let step = add.clone().with_fixed(&fixed, d);
            let r = add_stations(&step, &exact).map_err(|e| e.to_string())?;
            check_result(&step, &r)?;
            ensure(r.objective <= prev + 1e-12, || {
                format!("instance {k}: objective rose at delta {d}")
            })?;
            ensure(
                (curve.points[d].objective - r.objective).abs() <= 1e-12,
                || format!("instance {k}: sweep differs at delta {d}"),
            )?;
            prev = r.objective;
        }
        checked += 1;
    }
    Ok(format!("{checked} instances"))
}

fn corner_layers(ros: &[f64], fi: &[f64], pop: &[f64], mhv: &[f64]) -> LayerGrid {
    let cells: Vec<CellId> = (0..ros.len() as i32).map(|q| CellId::new(q, 0)).collect();
    let mut layers = LayerGrid::new(HexGrid::new((34.0, -118.0), 500.0, cells).unwrap());
    for (name, v) in [("ROS", ros), ("FI", fi), ("POP", pop), ("MHV", mhv)] {
        layers.insert(name, v.to_vec()).unwrap();
    }
    layers
}

fn unit_scenario(preset: &str) -> Scenario {
    let mut s = Scenario::preset(preset).unwrap();
    for name in ["ROS", "FI", "POP", "MHV"] {
        s.transforms.insert(name.into(), TransformSpec::capped(1.0));
    }
    s.transforms
        .insert(STTFS.into(), TransformSpec::capped(1800.0));
    s
}

fn ri_of(layers: &LayerGrid, seconds: f64, scenario: &Scenario) -> Result<Vec<f64>, String> {
    let n = layers.len();
    let sttfs = SttfsLayer {
        seconds: vec![seconds; n],
        status: vec![Reach::Reachable; n],
    };
    let f = features(layers, scenario).map_err(|e| e.to_string())?;
    let field = risk_field(layers.cells(), &f, &sttfs, scenario).map_err(|e| e.to_string())?;
    Ok(field
        .ri
        .into_iter()
        .map(|r| r.expect("reachable"))
        .collect())
}

fn ri_algebra() -> Outcome {
    let n = 5;
    let zeros = vec![0.0; n];
    let ones = vec![1.0; n];
    let ri = unit_scenario("RI");
    let all_zero = ri_of(&corner_layers(&zeros, &zeros, &zeros, &zeros), 0.0, &ri)?;
    ensure(all_zero == zeros, || format!("all-zero gives {all_zero:?}"))?;
    // default transforms collapse a constant zero layer too
    let dflt = ri_of(
        &corner_layers(&zeros, &zeros, &zeros, &zeros),
        600.0,
        &Scenario::default(),
    )?;
    ensure(dflt == zeros, || {
        format!("all-zero with default transforms gives {dflt:?}")
    })?;
    let all_one = ri_of(&corner_layers(&ones, &ones, &ones, &ones), 1800.0, &ri)?;
    ensure(all_one == ones, || format!("all-one gives {all_one:?}"))?;

    let mut hot = zeros.clone();
    hot[2] = 1.0;
    for (preset, fb) in [("RI", 0.5), ("RIF", 0.75), ("RIS", 0.25)] {
        let got = ri_of(
            &corner_layers(&hot, &hot, &zeros, &zeros),
            900.0,
            &unit_scenario(preset),
        )?;
        let mut want = zeros.clone();
        want[2] = fb * 0.5;
        ensure(got == want, || {
            format!("{preset} single hot cell gives {got:?}, want {want:?}")
        })?;
    }

    for (preset, fb, sd) in [("RI", 0.5, 0.5), ("RIF", 0.75, 0.25), ("RIS", 0.25, 0.75)] {
        let s = Scenario::preset(preset).unwrap();
        ensure(
            (s.outcome_weights.fb, s.outcome_weights.sd) == (fb, sd),
            || format!("{preset} weights"),
        )?;
        let w = s.feature_weights;
        ensure(
            (w.fb.ros, w.fb.fi, w.sd.pop, w.sd.mhv) == (0.5, 0.5, 0.5, 0.5),
            || format!("{preset} feature weights"),
        )?;
    }
    Ok("corner cases and presets exact".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 7] = [
        ("1 solver exactness", solver_exactness, 10),
        ("2 dijkstra correctness", dijkstra_correctness, 5),
        ("3 scaling law", scaling_law, 600),
        ("4 curve collapse", curve_collapse, 900),
        ("5 conservation", conservation, 30),
        ("6 model contracts", model_contracts, 60),
        ("7 RI algebra", ri_algebra, 60),
    ];
    let mut failed = 0;
    for (name, run, limit) in criteria {
        let started = Instant::now();
        let outcome = run();
        let elapsed = started.elapsed();
        let verdict = match outcome {
            Ok(detail) if elapsed <= Duration::from_secs(limit) => format!("PASS {name}: {detail}"),
            Ok(detail) => format!("FAIL {name}: {detail}; over the {limit} s limit"),
            Err(why) => format!("FAIL {name}: {why}"),
        };
        if verdict.starts_with("FAIL") {
            failed += 1;
        }
        println!("{verdict} ({:.2} s)", elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
