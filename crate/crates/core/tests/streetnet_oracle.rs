mod common;

use common::{floyd_warshall, random_digraph};
use hazgrid::hexgrid::{CellId, HexGrid};
use hazgrid::ingest::{EdgeRecord, NodeRecord};
use hazgrid::streetnet::{
    associate_cells, shortest_times_from, shortest_times_to, RoadGraph, UNREACHABLE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn multi_source_field_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let n = rng.gen_range(2..=200);
        let m = rng.gen_range(0..n * 4);
        let (nodes, edges) = random_digraph(&mut rng, n, m);
        let graph = RoadGraph::new(&nodes, &edges).unwrap();
        let fw = floyd_warshall(&graph, &edges);
        let k = rng.gen_range(1..=n.min(6));
        let sources: Vec<i64> = (0..k).map(|_| nodes[rng.gen_range(0..n)].id).collect();
        let src_idx: Vec<usize> = sources
            .iter()
            .map(|s| graph.index_of(*s).unwrap())
            .collect();

        let from = shortest_times_from(&graph, &sources).unwrap();
        let to = shortest_times_to(&graph, &sources).unwrap();
        for v in 0..n {
            let best_from = src_idx.iter().map(|&s| fw[s][v]).min().unwrap();
            let best_to = src_idx.iter().map(|&s| fw[v][s]).min().unwrap();
            assert_eq!(from.raw_ms()[v], best_from, "trial {trial} node {v}");
            assert_eq!(to.raw_ms()[v], best_to, "trial {trial} node {v}");
            if best_from != UNREACHABLE {
                // smallest id among the tied nearest sources
                let expect = src_idx
                    .iter()
                    .copied()
                    .filter(|&s| fw[s][v] == best_from)
                    .min_by_key(|&s| graph.node_id(s))
                    .unwrap();
                assert_eq!(
                    from.nearest_origin(v),
                    Some(expect),
                    "trial {trial} node {v}"
                );
            } else {
                assert_eq!(from.nearest_origin(v), None);
            }
        }
        for &s in &src_idx {
            assert_eq!(from.ms(s), Some(0));
        }
    }
}

#[test]
fn symmetric_graphs_give_equal_directional_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (nodes, mut edges) = random_digraph(&mut rng, 60, 150);
    let reversed: Vec<EdgeRecord> = edges
        .iter()
        .map(|e| EdgeRecord {
            from: e.to,
            to: e.from,
            ..e.clone()
        })
        .collect();
    edges.extend(reversed);
    let graph = RoadGraph::new(&nodes, &edges).unwrap();
    let sources = [nodes[0].id, nodes[9].id];
    let from = shortest_times_from(&graph, &sources).unwrap();
    let to = shortest_times_to(&graph, &sources).unwrap();
    assert_eq!(from.raw_ms(), to.raw_ms());
}

#[test]
fn one_way_graph_respects_direction() {
    let nodes: Vec<NodeRecord> = (1..=3)
        .map(|id| NodeRecord {
            id,
            lat: 34.0,
            lon: -118.0 + id as f64 * 1e-3,
        })
        .collect();
    let edges: Vec<EdgeRecord> = [(1, 2), (2, 3), (3, 1)]
        .iter()
        .map(|&(a, b)| EdgeRecord {
            from: a,
            to: b,
            travel_seconds: 10.0,
            length_m: None,
            class: None,
        })
        .collect();
    let graph = RoadGraph::new(&nodes, &edges).unwrap();
    let from = shortest_times_from(&graph, &[1]).unwrap();
    let to = shortest_times_to(&graph, &[1]).unwrap();
    assert_eq!(from.raw_ms(), &[0, 10_000, 20_000]);
    assert_eq!(to.raw_ms(), &[0, 20_000, 10_000]);
}

#[test]
fn aligned_lattice_associates_identity() {
    // 4×4 block of cells with a node on every center, ids assigned in a
    // scrambled order; a brute-force nearest search is the oracle.
    let cells: Vec<CellId> = (0..4)
        .flat_map(|r| (0..4).map(move |q| CellId::new(q - r / 2, r)))
        .collect();
    let grid = HexGrid::new((37.5, -122.0), 350.0, cells.clone()).unwrap();
    let nodes: Vec<NodeRecord> = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let (lat, lon) = grid.center(c);
            NodeRecord {
                id: ((i * 5) % 16) as i64 + 100,
                lat,
                lon,
            }
        })
        .collect();
    let graph = RoadGraph::new(&nodes, &[]).unwrap();
    let assoc = associate_cells(&graph, &grid, 2000.0).unwrap();
    assert_eq!(assoc.len(), 16);
    for (ci, &cell) in grid.cells().iter().enumerate() {
        let (cx, cy) = grid.center_xy(cell);
        let oracle = nodes
            .iter()
            .min_by(|a, b| {
                let da = grid
                    .project(a.lat, a.lon)
                    .map(|(x, y)| (x - cx).hypot(y - cy))
                    .unwrap();
                let db = grid
                    .project(b.lat, b.lon)
                    .map(|(x, y)| (x - cx).hypot(y - cy))
                    .unwrap();
                da.total_cmp(&db)
            })
            .unwrap();
        assert_eq!(graph.node_id(assoc.nodes[ci].unwrap()), oracle.id);
        // identity: the node built on this cell's center
        let own = nodes.iter().position(|n| n.id == oracle.id).unwrap();
        assert_eq!(own, ci);
    }
}
