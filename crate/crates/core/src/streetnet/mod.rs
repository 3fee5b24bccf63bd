//! Directed street network, shortest travel-time fields, cell association,
//! station coverage and isochrones.
//!
//! Travel times are held in integer milliseconds so that comparisons and
//! tie-breaks are exact.

mod associate;
mod coverage;
mod dijkstra;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::ingest::{EdgeRecord, NodeRecord, RegionBundle};

pub use associate::{
    associate_cells, sttfs_layer, Association, Reach, SttfsLayer, DEFAULT_CUTOFF_M,
};
pub use coverage::{coverage, isochrone, isochrones_geojson, CoverageReport, StationCoverage};
pub use dijkstra::{
    dijkstra_distances, shortest_times_from, shortest_times_to, travel_field_csv, TravelField,
    UNREACHABLE,
};

/// Converts seconds to the internal millisecond representation.
pub fn seconds_to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round() as u64
}

pub fn ms_to_seconds(ms: u64) -> f64 {
    if ms == UNREACHABLE {
        f64::INFINITY
    } else {
        ms as f64 / 1000.0
    }
}

#[derive(Debug, Clone)]
pub struct RoadGraph {
    ids: Vec<i64>,
    coords: Vec<(f64, f64)>,
    index: HashMap<i64, usize>,
    out_adj: Vec<Vec<(u32, u64)>>,
    in_adj: Vec<Vec<(u32, u64)>>,
    edge_count: usize,
}

impl RoadGraph {
    /// Nodes are re-ordered by id, so index order equals id order.
    pub fn new(nodes: &[NodeRecord], edges: &[EdgeRecord]) -> Result<Self> {
        let mut sorted: Vec<&NodeRecord> = nodes.iter().collect();
        sorted.sort_by_key(|n| n.id);
        let ids: Vec<i64> = sorted.iter().map(|n| n.id).collect();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Reference("duplicate node ids in network".into()));
        }
        let coords = sorted.iter().map(|n| (n.lat, n.lon)).collect();
        let index: HashMap<i64, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut out_adj = vec![Vec::new(); ids.len()];
        let mut in_adj = vec![Vec::new(); ids.len()];
        for e in edges {
            let (Some(&a), Some(&b)) = (index.get(&e.from), index.get(&e.to)) else {
                return Err(Error::Reference(format!(
                    "edge {}->{} references an unknown node",
                    e.from, e.to
                )));
            };
            if !(e.travel_seconds >= 0.0) || !e.travel_seconds.is_finite() {
                return Err(Error::Range(format!(
                    "edge {}->{} travel_seconds {}",
                    e.from, e.to, e.travel_seconds
                )));
            }
            let ms = seconds_to_ms(e.travel_seconds);
            out_adj[a].push((b as u32, ms));
            in_adj[b].push((a as u32, ms));
        }
        Ok(RoadGraph {
            ids,
            coords,
            index,
            out_adj,
            in_adj,
            edge_count: edges.len(),
        })
    }

    pub fn from_bundle(bundle: &RegionBundle) -> Result<Self> {
        Self::new(&bundle.nodes, &bundle.edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_id(&self, idx: usize) -> i64 {
        self.ids[idx]
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// (lat, lon) of a node index.
    pub fn coord(&self, idx: usize) -> (f64, f64) {
        self.coords[idx]
    }

    pub fn out_edges(&self, idx: usize) -> &[(u32, u64)] {
        &self.out_adj[idx]
    }

    pub fn in_edges(&self, idx: usize) -> &[(u32, u64)] {
        &self.in_adj[idx]
    }

    /// Node index nearest to (lat, lon) by planar distance on a local
    /// projection; ties go to the smaller id.
    pub fn nearest_node(&self, lat: f64, lon: f64) -> Option<usize> {
        let k = lat.to_radians().cos();
        let mut best: Option<(f64, usize)> = None;
        for (i, &(nlat, nlon)) in self.coords.iter().enumerate() {
            let d = (nlat - lat).powi(2) + ((nlon - lon) * k).powi(2);
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, i));
            }
        }
        best.map(|(_, i)| i)
    }
}
