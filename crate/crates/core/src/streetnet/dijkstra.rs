use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use super::{ms_to_seconds, RoadGraph};
use crate::error::{Error, Result};

pub const UNREACHABLE: u64 = u64::MAX;
const NO_ORIGIN: u32 = u32::MAX;

/// Shortest time from the nearest origin to every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelField {
    origins: Vec<usize>,
    dist_ms: Vec<u64>,
    origin: Vec<u32>,
    reverse: bool,
}

impl TravelField {
    /// Origin node indices, ascending.
    pub fn origins(&self) -> &[usize] {
        &self.origins
    }

    pub fn len(&self) -> usize {
        self.dist_ms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist_ms.is_empty()
    }

    pub fn ms(&self, node: usize) -> Option<u64> {
        let d = self.dist_ms[node];
        (d != UNREACHABLE).then_some(d)
    }

    pub fn raw_ms(&self) -> &[u64] {
        &self.dist_ms
    }

    pub fn seconds(&self, node: usize) -> f64 {
        ms_to_seconds(self.dist_ms[node])
    }

    /// Index of the origin serving a node.
    pub fn nearest_origin(&self, node: usize) -> Option<usize> {
        let o = self.origin[node];
        (o != NO_ORIGIN).then_some(o as usize)
    }

    /// True when times were computed toward the origins (node → origin).
    pub fn is_reverse(&self) -> bool {
        self.reverse
    }
}

fn resolve_sources(graph: &RoadGraph, sources: &[i64]) -> Result<Vec<usize>> {
    if sources.is_empty() {
        return Err(Error::Argument(
            "shortest path needs at least one source".into(),
        ));
    }
    let mut idx: Vec<usize> = sources
        .iter()
        .map(|id| {
            graph
                .index_of(*id)
                .ok_or_else(|| Error::Reference(format!("source node {id} not in graph")))
        })
        .collect::<Result<_>>()?;
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Multi-source Dijkstra along edge direction (origin → node). Among
/// equally fast origins the one with the smallest id wins.
pub fn shortest_times_from(graph: &RoadGraph, sources: &[i64]) -> Result<TravelField> {
    let origins = resolve_sources(graph, sources)?;
    Ok(run(graph, origins, false))
}

/// Same as [`shortest_times_from`] but following edges backwards, i.e. the
/// time from each node to its nearest origin.
pub fn shortest_times_to(graph: &RoadGraph, targets: &[i64]) -> Result<TravelField> {
    let origins = resolve_sources(graph, targets)?;
    Ok(run(graph, origins, true))
}

/// Single-source distances in milliseconds from a node index.
pub fn dijkstra_distances(graph: &RoadGraph, source: usize) -> Vec<u64> {
    run(graph, vec![source], false).dist_ms
}

fn run(graph: &RoadGraph, origins: Vec<usize>, reverse: bool) -> TravelField {
    let n = graph.node_count();
    let mut dist = vec![UNREACHABLE; n];
    let mut origin = vec![NO_ORIGIN; n];
    let mut heap = BinaryHeap::with_capacity(origins.len() * 4);
    for &s in &origins {
        dist[s] = 0;
        origin[s] = s as u32;
        heap.push(Reverse((0u64, s as u32, s as u32)));
    }
    while let Some(Reverse((d, o, u))) = heap.pop() {
        let u = u as usize;
        if (d, o) != (dist[u], origin[u]) {
            continue;
        }
        let adj = if reverse {
            graph.in_edges(u)
        } else {
            graph.out_edges(u)
        };
        for &(v, w) in adj {
            let v = v as usize;
            let nd = d + w;
            if (nd, o) < (dist[v], origin[v]) {
                dist[v] = nd;
                origin[v] = o;
                heap.push(Reverse((nd, o, v as u32)));
            }
        }
    }
    TravelField {
        origins,
        dist_ms: dist,
        origin,
        reverse,
    }
}

/// `node_id,seconds,origin_id`; unreachable nodes have empty fields.
pub fn travel_field_csv(graph: &RoadGraph, field: &TravelField) -> String {
    let mut out = String::from("node_id,seconds,origin_id\n");
    for i in 0..field.len() {
        match (field.ms(i), field.nearest_origin(i)) {
            (Some(_), Some(o)) => {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    graph.node_id(i),
                    field.seconds(i),
                    graph.node_id(o)
                );
            }
            _ => {
                let _ = writeln!(out, "{},,", graph.node_id(i));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EdgeRecord, NodeRecord};
    use proptest::prelude::*;

    fn edge(from: i64, to: i64, s: f64) -> EdgeRecord {
        EdgeRecord {
            from,
            to,
            travel_seconds: s,
            length_m: None,
            class: None,
        }
    }

    fn nodes(n: i64) -> Vec<NodeRecord> {
        (1..=n)
            .map(|id| NodeRecord {
                id,
                lat: 0.0,
                lon: id as f64 * 1e-3,
            })
            .collect()
    }

    #[test]
    fn line_graph() {
        let g = RoadGraph::new(&nodes(3), &[edge(1, 2, 60.0), edge(2, 3, 60.0)]).unwrap();
        let f = shortest_times_from(&g, &[1]).unwrap();
        assert_eq!(f.seconds(0), 0.0);
        assert_eq!(f.seconds(1), 60.0);
        assert_eq!(f.seconds(2), 120.0);
        // directed: nothing reaches node 1 from node 3
        let back = shortest_times_from(&g, &[3]).unwrap();
        assert_eq!(back.ms(0), None);
        // toward node 3 instead
        let to = shortest_times_to(&g, &[3]).unwrap();
        assert_eq!(to.seconds(0), 120.0);
    }

    #[test]
    fn empty_sources() {
        let g = RoadGraph::new(&nodes(2), &[]).unwrap();
        assert!(matches!(
            shortest_times_from(&g, &[]),
            Err(Error::Argument(_))
        ));
        assert!(matches!(
            shortest_times_from(&g, &[42]),
            Err(Error::Reference(_))
        ));
    }

    #[test]
    fn equidistant_origins_pick_smallest_id() {
        let g = RoadGraph::new(&nodes(3), &[edge(1, 2, 10.0), edge(3, 2, 10.0)]).unwrap();
        let f = shortest_times_from(&g, &[3, 1]).unwrap();
        assert_eq!(f.nearest_origin(1), Some(0));
        assert_eq!(f.origins(), &[0, 2]);
    }

    #[test]
    fn csv_export() {
        let g = RoadGraph::new(&nodes(3), &[edge(1, 2, 1.5)]).unwrap();
        let f = shortest_times_from(&g, &[1]).unwrap();
        assert_eq!(
            travel_field_csv(&g, &f),
            "node_id,seconds,origin_id\n1,0,1\n2,1.5,1\n3,,\n"
        );
    }

    fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u32)>)> {
        (2usize..25).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec((0..n, 0..n, 0u32..5000), 0..(n * 3)),
            )
        })
    }

    proptest! {
        #[test]
        fn adding_an_origin_never_increases_times(
            (n, raw) in arb_graph(),
            a in 0usize..25,
            b in 0usize..25,
        ) {
            let edges: Vec<EdgeRecord> = raw
                .iter()
                .map(|&(u, v, ms)| edge(u as i64 + 1, v as i64 + 1, ms as f64 / 1000.0))
                .collect();
            let g = RoadGraph::new(&nodes(n as i64), &edges).unwrap();
            let (a, b) = ((a % n) as i64 + 1, (b % n) as i64 + 1);
            let one = shortest_times_from(&g, &[a]).unwrap();
            let two = shortest_times_from(&g, &[a, b]).unwrap();
            let only_b = shortest_times_from(&g, &[b]).unwrap();
            for i in 0..n {
                prop_assert!(two.raw_ms()[i] <= one.raw_ms()[i]);
                prop_assert_eq!(two.raw_ms()[i], one.raw_ms()[i].min(only_b.raw_ms()[i]));
            }
        }
    }
}
