#![allow(dead_code)]

use hazgrid::hexgrid::CellId;
use hazgrid::ingest::{EdgeRecord, NodeRecord};
use hazgrid::optimizer::Instance;
use hazgrid::riskmodel::Resolved;
use hazgrid::streetnet::{RoadGraph, UNREACHABLE};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random risk instance: uniform base values and random travel times with
/// zero self-travel, scaled by a 30-minute cap.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let cells: Vec<CellId> = (0..n as i32).map(|q| CellId::new(q, q % 3)).collect();
    let mut cells = cells;
    cells.sort();
    let base: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let travel: Vec<u32> = (0..n * n)
        .map(|k| {
            if k / n == k % n {
                0
            } else {
                rng.gen_range(0..3_600_000)
            }
        })
        .collect();
    Instance::from_travel(cells, base, travel, &Resolved::Linear { cap: 1800.0 }).unwrap()
}

/// Random instance from points in the unit square, with travel proportional
/// to Euclidean distance. Produces realistic ties and structure.
pub fn planar_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let cells: Vec<CellId> = (0..n as i32).map(|q| CellId::new(q, 0)).collect();
    let base: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
    let travel: Vec<u32> = (0..n * n)
        .map(|k| {
            let (a, b) = (pts[k / n], pts[k % n]);
            (((a.0 - b.0).hypot(a.1 - b.1)) * 1_800_000.0).round() as u32
        })
        .collect();
    Instance::from_travel(cells, base, travel, &Resolved::Linear { cap: 1800.0 }).unwrap()
}

/// Random digraph with shuffled node ids and half-second travel times.
pub fn random_digraph(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
) -> (Vec<NodeRecord>, Vec<EdgeRecord>) {
    // ids are shuffled relative to position to exercise the id tie-break
    let mut ids: Vec<i64> = (0..n as i64).map(|i| i * 7 + 3).collect();
    for i in (1..n).rev() {
        ids.swap(i, rng.gen_range(0..=i));
    }
    let nodes = ids
        .iter()
        .map(|&id| NodeRecord {
            id,
            lat: 34.0 + rng.gen::<f64>() * 0.01,
            lon: -118.0 + rng.gen::<f64>() * 0.01,
        })
        .collect();
    let edges = (0..m)
        .map(|_| EdgeRecord {
            from: ids[rng.gen_range(0..n)],
            to: ids[rng.gen_range(0..n)],
            // whole milliseconds, few distinct values so ties are common
            travel_seconds: rng.gen_range(0..20) as f64 * 0.5,
            length_m: None,
            class: None,
        })
        .collect();
    (nodes, edges)
}

/// Floyd-Warshall over node indices (sorted by id) in milliseconds.
pub fn floyd_warshall(graph: &RoadGraph, edges: &[EdgeRecord]) -> Vec<Vec<u64>> {
    let n = graph.node_count();
    let mut d = vec![vec![UNREACHABLE; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in edges {
        let a = graph.index_of(e.from).unwrap();
        let b = graph.index_of(e.to).unwrap();
        let w = (e.travel_seconds * 1000.0).round() as u64;
        d[a][b] = d[a][b].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == UNREACHABLE {
                continue;
            }
            for j in 0..n {
                if d[k][j] != UNREACHABLE && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}
