use std::collections::HashMap;

use super::{RoadGraph, TravelField};
use crate::error::{Error, Result};
use crate::hexgrid::{CellId, HexGrid};

pub const DEFAULT_CUTOFF_M: f64 = 2000.0;

// Distances closer than this are treated as equal so that symmetric layouts
// resolve by node id rather than by rounding noise.
const TIE_EPS_M: f64 = 1e-9;

/// Cell → nearest street node.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    pub cells: Vec<CellId>,
    /// Node index per cell, `None` when no node lies within the cutoff.
    pub nodes: Vec<Option<usize>>,
    pub cutoff_m: f64,
}

impl Association {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn unassociated(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_none()).count()
    }

    pub fn node_of(&self, cell_index: usize) -> Option<usize> {
        self.nodes[cell_index]
    }
}

/// Maps each cell center to the nearest node in the grid's plane. A
/// non-finite `cutoff_m` disables the cutoff.
pub fn associate_cells(graph: &RoadGraph, grid: &HexGrid, cutoff_m: f64) -> Result<Association> {
    if graph.is_empty() {
        return Err(Error::Argument(
            "cannot associate cells with an empty graph".into(),
        ));
    }
    if !(cutoff_m >= 0.0) {
        return Err(Error::Argument(format!("association cutoff {cutoff_m} m")));
    }
    let pts: Vec<(f64, f64)> = (0..graph.node_count())
        .map(|i| {
            let (lat, lon) = graph.coord(i);
            grid.project_unchecked(lat, lon)
        })
        .collect();

    let nearest = |cx: f64, cy: f64, candidates: &mut dyn Iterator<Item = usize>| {
        let mut best: Option<(f64, usize)> = None;
        for i in candidates {
            let d = (pts[i].0 - cx).hypot(pts[i].1 - cy);
            if d > cutoff_m {
                continue;
            }
            best = match best {
                Some((bd, bi)) if d > bd + TIE_EPS_M || (d >= bd - TIE_EPS_M && i > bi) => {
                    Some((bd, bi))
                }
                _ => Some((d, i)),
            };
        }
        best.map(|(_, i)| i)
    };

    let nodes: Vec<Option<usize>> = if cutoff_m.is_finite() && cutoff_m > 0.0 {
        let b = cutoff_m;
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            buckets
                .entry(((x / b).floor() as i64, (y / b).floor() as i64))
                .or_default()
                .push(i);
        }
        grid.cells()
            .iter()
            .map(|&cell| {
                let (cx, cy) = grid.center_xy(cell);
                let (bx, by) = ((cx / b).floor() as i64, (cy / b).floor() as i64);
                let mut it = (-1..=1)
                    .flat_map(|dx| (-1..=1).map(move |dy| (bx + dx, by + dy)))
                    .filter_map(|k| buckets.get(&k))
                    .flatten()
                    .copied();
                nearest(cx, cy, &mut it)
            })
            .collect()
    } else {
        grid.cells()
            .iter()
            .map(|&cell| {
                let (cx, cy) = grid.center_xy(cell);
                nearest(cx, cy, &mut (0..pts.len()))
            })
            .collect()
    };

    Ok(Association {
        cells: grid.cells().to_vec(),
        nodes,
        cutoff_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reach {
    Reachable,
    Unassociated,
    Unreachable,
}

/// Per-cell response seconds; flagged cells carry `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq)]
pub struct SttfsLayer {
    pub seconds: Vec<f64>,
    pub status: Vec<Reach>,
}

impl SttfsLayer {
    pub fn count(&self, reach: Reach) -> usize {
        self.status.iter().filter(|s| **s == reach).count()
    }

    pub fn is_reachable(&self, i: usize) -> bool {
        self.status[i] == Reach::Reachable
    }

    pub fn fraction_reachable(&self) -> f64 {
        if self.status.is_empty() {
            0.0
        } else {
            self.count(Reach::Reachable) as f64 / self.status.len() as f64
        }
    }
}

pub fn sttfs_layer(field: &TravelField, association: &Association) -> SttfsLayer {
    let mut seconds = Vec::with_capacity(association.len());
    let mut status = Vec::with_capacity(association.len());
    for node in &association.nodes {
        match node.map(|n| (n, field.ms(n))) {
            None => {
                seconds.push(f64::INFINITY);
                status.push(Reach::Unassociated);
            }
            Some((_, None)) => {
                seconds.push(f64::INFINITY);
                status.push(Reach::Unreachable);
            }
            Some((n, Some(_))) => {
                seconds.push(field.seconds(n));
                status.push(Reach::Reachable);
            }
        }
    }
    SttfsLayer { seconds, status }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{EdgeRecord, NodeRecord};
    use crate::streetnet::shortest_times_from;

    fn grid() -> HexGrid {
        HexGrid::new((34.0, -118.0), 300.0, [CellId::new(0, 0)]).unwrap()
    }

    fn node_at(g: &HexGrid, id: i64, x: f64, y: f64) -> NodeRecord {
        let (lat, lon) = g.unproject(x, y);
        NodeRecord { id, lat, lon }
    }

    #[test]
    fn node_on_center_is_chosen() {
        let g = grid();
        let nodes = vec![node_at(&g, 7, 0.0, 0.0), node_at(&g, 8, 50.0, 0.0)];
        let graph = RoadGraph::new(&nodes, &[]).unwrap();
        let a = associate_cells(&graph, &g, DEFAULT_CUTOFF_M).unwrap();
        assert_eq!(a.nodes[0].map(|i| graph.node_id(i)), Some(7));
    }

    #[test]
    fn equidistant_nodes_pick_smallest_id() {
        let g = grid();
        let nodes = vec![node_at(&g, 9, -40.0, 0.0), node_at(&g, 3, 40.0, 0.0)];
        let graph = RoadGraph::new(&nodes, &[]).unwrap();
        for cutoff in [DEFAULT_CUTOFF_M, f64::INFINITY] {
            let a = associate_cells(&graph, &g, cutoff).unwrap();
            assert_eq!(a.nodes[0].map(|i| graph.node_id(i)), Some(3));
        }
    }

    #[test]
    fn cutoff_and_empty_graph() {
        let g = grid();
        let graph = RoadGraph::new(&[node_at(&g, 1, 2500.0, 0.0)], &[]).unwrap();
        let a = associate_cells(&graph, &g, DEFAULT_CUTOFF_M).unwrap();
        assert_eq!(a.unassociated(), 1);
        let a = associate_cells(&graph, &g, f64::INFINITY).unwrap();
        assert_eq!(a.unassociated(), 0);
        let empty = RoadGraph::new(&[], &[]).unwrap();
        assert!(matches!(
            associate_cells(&empty, &g, DEFAULT_CUTOFF_M),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn line_field_maps_onto_cells() {
        let g = HexGrid::new(
            (34.0, -118.0),
            300.0,
            [CellId::new(0, 0), CellId::new(1, 0), CellId::new(2, 0)],
        )
        .unwrap();
        let nodes: Vec<NodeRecord> = g
            .cells()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let (x, y) = g.center_xy(c);
                node_at(&g, i as i64 + 1, x, y)
            })
            .collect();
        let e = |a, b| EdgeRecord {
            from: a,
            to: b,
            travel_seconds: 60.0,
            length_m: None,
            class: None,
        };
        let graph = RoadGraph::new(&nodes, &[e(1, 2), e(2, 3)]).unwrap();
        let a = associate_cells(&graph, &g, DEFAULT_CUTOFF_M).unwrap();
        let f = shortest_times_from(&graph, &[1]).unwrap();
        let s = sttfs_layer(&f, &a);
        assert_eq!(s.seconds, vec![0.0, 60.0, 120.0]);

        let f = shortest_times_from(&graph, &[2]).unwrap();
        let s = sttfs_layer(&f, &a);
        assert_eq!(s.status[0], Reach::Unreachable);
        assert_eq!(s.count(Reach::Unreachable), 1);
        assert!((s.fraction_reachable() - 2.0 / 3.0).abs() < 1e-12);
    }
}
