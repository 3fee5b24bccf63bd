use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{sttfs_layer, Association, RoadGraph, TravelField};
use crate::error::{Error, Result};
use crate::hexgrid::{CellId, HexGrid, LayerGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationCoverage {
    pub node_id: i64,
    pub nodes: usize,
    pub cells: usize,
    pub population: f64,
    pub area_km2: f64,
    pub mean_seconds: f64,
    pub max_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub stations: Vec<StationCoverage>,
    pub mean_seconds: f64,
    pub max_seconds: f64,
    pub fraction_reachable: f64,
    pub reachable_population: f64,
    pub unassociated_cells: usize,
    pub unreachable_cells: usize,
}

/// Per-station service areas under nearest-origin assignment.
pub fn coverage(
    graph: &RoadGraph,
    field: &TravelField,
    association: &Association,
    layers: &LayerGrid,
) -> Result<CoverageReport> {
    let pop = layers.require("POP")?;
    if association.cells.as_slice() != layers.cells() {
        return Err(Error::Alignment(
            "association and layers cover different cells".into(),
        ));
    }
    let slot = |node: usize| field.origins().binary_search(&node).ok();
    let mut stations: Vec<StationCoverage> = field
        .origins()
        .iter()
        .map(|&o| StationCoverage {
            node_id: graph.node_id(o),
            nodes: 0,
            cells: 0,
            population: 0.0,
            area_km2: 0.0,
            mean_seconds: 0.0,
            max_seconds: 0.0,
        })
        .collect();
    for node in 0..field.len() {
        if let Some(s) = field.nearest_origin(node).and_then(slot) {
            stations[s].nodes += 1;
        }
    }

    let sttfs = sttfs_layer(field, association);
    let area = layers.grid.cell_area_km2();
    let mut sum_all = 0.0;
    let mut max_all: f64 = 0.0;
    let mut reachable = 0usize;
    let mut reachable_population = 0.0;
    for (i, node) in association.nodes.iter().enumerate() {
        if !sttfs.is_reachable(i) {
            continue;
        }
        let Some(s) = node.and_then(|n| field.nearest_origin(n)).and_then(slot) else {
            continue;
        };
        let t = sttfs.seconds[i];
        let st = &mut stations[s];
        st.cells += 1;
        st.population += pop[i];
        st.area_km2 += area;
        st.mean_seconds += t;
        st.max_seconds = st.max_seconds.max(t);
        sum_all += t;
        max_all = max_all.max(t);
        reachable += 1;
        reachable_population += pop[i];
    }
    for st in &mut stations {
        if st.cells > 0 {
            st.mean_seconds /= st.cells as f64;
        }
    }
    let n = association.len();
    Ok(CoverageReport {
        stations,
        mean_seconds: if reachable > 0 {
            sum_all / reachable as f64
        } else {
            0.0
        },
        max_seconds: max_all,
        fraction_reachable: if n > 0 {
            reachable as f64 / n as f64
        } else {
            0.0
        },
        reachable_population,
        unassociated_cells: sttfs.count(super::Reach::Unassociated),
        unreachable_cells: sttfs.count(super::Reach::Unreachable),
    })
}

/// Cells whose response time is within each threshold. Sets are nested.
pub fn isochrone(
    field: &TravelField,
    association: &Association,
    thresholds: &[f64],
) -> Result<Vec<(f64, Vec<CellId>)>> {
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) || thresholds.iter().any(|t| t.is_nan()) {
        return Err(Error::Argument(
            "isochrone thresholds must be sorted ascending".into(),
        ));
    }
    let sttfs = sttfs_layer(field, association);
    Ok(thresholds
        .iter()
        .map(|&tau| {
            let cells = association
                .cells
                .iter()
                .zip(&sttfs.seconds)
                .enumerate()
                .filter(|(i, (_, s))| sttfs.is_reachable(*i) && **s <= tau)
                .map(|(_, (c, _))| *c)
                .collect();
            (tau, cells)
        })
        .collect())
}

/// One MultiPolygon feature per threshold.
pub fn isochrones_geojson(grid: &HexGrid, sets: &[(f64, Vec<CellId>)]) -> Value {
    let features: Vec<Value> = sets
        .iter()
        .map(|(tau, cells)| {
            let polys: Vec<Value> = cells
                .iter()
                .map(|&c| {
                    let mut ring: Vec<[f64; 2]> = grid
                        .hexagon(c)
                        .iter()
                        .map(|&(x, y)| {
                            let (lat, lon) = grid.unproject(x, y);
                            [lon, lat]
                        })
                        .collect();
                    ring.push(ring[0]);
                    json!([ring])
                })
                .collect();
            let threshold = if tau.is_finite() {
                json!(tau)
            } else {
                Value::Null
            };
            json!({
                "type": "Feature",
                "geometry": { "type": "MultiPolygon", "coordinates": polys },
                "properties": {
                    "threshold_seconds": threshold,
                    "cells": cells.iter().map(|c| [c.q, c.r]).collect::<Vec<_>>(),
                },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
