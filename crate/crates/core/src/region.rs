//! End-to-end region assembly: tessellate a bundle, aggregate every layer,
//! load the street graph, associate cells with nodes and compute the
//! response-time field of the existing stations.

use std::collections::BTreeSet;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexgrid::{
    aggregate_points, aggregate_polygons, aggregate_polylines, aggregate_raster,
    aggregate_raster_proportions, raster_cell_stats, CellId, HexGrid, LayerGrid, RasterStat,
};
use crate::ingest::RegionBundle;
use crate::optimizer::{build_distance_instance, build_instance, Instance, InstanceConfig};
use crate::riskmodel::{features, risk_field, RiskField, Scenario, STTFS};
use crate::streetnet::{
    associate_cells, shortest_times_from, sttfs_layer, Association, RoadGraph, SttfsLayer,
    TravelField, DEFAULT_CUTOFF_M,
};

/// Point set holding per-person weights (`value` = head count).
pub const POPULATION_POINTS: &str = "population";
pub const STATION_POINTS: &str = "stations";
/// Polygon set with a numeric `POP` attribute, used when no population
/// points exist.
pub const TRACT_POLYGONS: &str = "tracts";
pub const FIRE_SCAR_POLYGONS: &str = "fire_scars";

const MEAN_RASTERS: [&str; 4] = ["ROS", "FI", "MHV", "MHI"];
const REQUIRED: [&str; 3] = ["ROS", "FI", "MHV"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionConfig {
    pub edge_m: f64,
    pub cutoff_m: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            // 0.74 km² cells
            edge_m: crate::hexgrid::edge_for_area_km2(0.74),
            cutoff_m: DEFAULT_CUTOFF_M,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Region {
    pub name: String,
    pub checksum: String,
    pub config: RegionConfig,
    pub layers: LayerGrid,
    pub graph: RoadGraph,
    pub association: Association,
    /// Distinct cells holding at least one station, ascending.
    pub station_cells: Vec<CellId>,
    /// Graph node ids serving those cells.
    pub station_nodes: Vec<i64>,
    pub travel: Option<TravelField>,
    pub sttfs: SttfsLayer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub name: String,
    pub checksum: String,
    pub nodes: usize,
    pub edges: usize,
    pub cells: usize,
    pub edge_m: f64,
    pub cell_area_km2: f64,
    pub layers: Vec<String>,
    pub stations: usize,
    pub station_cells: Vec<CellId>,
    pub population: f64,
    pub unassociated_cells: usize,
    pub fraction_reachable: f64,
}

impl Region {
    pub fn build(bundle: &RegionBundle, config: RegionConfig) -> Result<Self> {
        bundle.validate()?;
        if bundle.nodes.is_empty() {
            return Err(Error::Argument("region has no street nodes".into()));
        }
        let extent: Vec<(f64, f64)> = bundle.nodes.iter().map(|n| (n.lat, n.lon)).collect();
        let grid = HexGrid::covering(&extent, config.edge_m)?;
        let layers = tessellate(bundle, grid)?;
        let graph = RoadGraph::from_bundle(bundle)?;
        let association = associate_cells(&graph, &layers.grid, config.cutoff_m)?;

        let station_cells = layers
            .get("STATIONS")
            .map(|counts| {
                layers
                    .cells()
                    .iter()
                    .zip(counts)
                    .filter(|(_, &c)| c > 0.0)
                    .map(|(cell, _)| *cell)
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        let station_nodes = station_node_ids(&layers.grid, &graph, &association, &station_cells)?;
        let (travel, sttfs) = response_times(&graph, &association, &station_nodes)?;
        Ok(Region {
            name: bundle.name.clone(),
            checksum: bundle.checksum(),
            config,
            layers,
            graph,
            association,
            station_cells,
            station_nodes,
            travel,
            sttfs,
        })
    }

    pub fn grid(&self) -> &HexGrid {
        &self.layers.grid
    }

    pub fn population(&self) -> &[f64] {
        self.layers.get("POP").unwrap_or(&[])
    }

    pub fn summary(&self) -> RegionSummary {
        RegionSummary {
            name: self.name.clone(),
            checksum: self.checksum.clone(),
            nodes: self.graph.node_count(),
            edges: self.graph.edge_count(),
            cells: self.layers.len(),
            edge_m: self.grid().edge_m(),
            cell_area_km2: self.grid().cell_area_km2(),
            layers: self.layers.names().map(str::to_owned).collect(),
            stations: self
                .layers
                .get("STATIONS")
                .map_or(0, |v| v.iter().sum::<f64>() as usize),
            station_cells: self.station_cells.clone(),
            population: self.population().iter().sum(),
            unassociated_cells: self.association.unassociated(),
            fraction_reachable: self.sttfs.fraction_reachable(),
        }
    }

    /// Layers including the current STTFS (infinite where flagged).
    pub fn layers_with_sttfs(&self) -> Result<LayerGrid> {
        let mut out = self.layers.clone();
        out.insert(STTFS, self.sttfs.seconds.clone())?;
        Ok(out)
    }

    /// Risk of the current station placement.
    pub fn score(&self, scenario: &Scenario) -> Result<RiskField> {
        let f = features(&self.layers, scenario)?;
        risk_field(self.layers.cells(), &f, &self.sttfs, scenario)
    }

    /// Risk after moving the stations to `open_cells`. The travel transform
    /// keeps the cap fixed by `baseline` so both fields are comparable.
    pub fn rescore(&self, baseline: &RiskField, open_cells: &[CellId]) -> Result<RiskField> {
        let nodes = station_node_ids(self.grid(), &self.graph, &self.association, open_cells)?;
        let (_, sttfs) = response_times(&self.graph, &self.association, &nodes)?;
        let mut s = Vec::with_capacity(baseline.len());
        let mut ri = Vec::with_capacity(baseline.len());
        for i in 0..baseline.len() {
            if sttfs.is_reachable(i) {
                let si = baseline.travel.apply(sttfs.seconds[i]);
                s.push(Some(si));
                ri.push(Some(baseline.base[i] * si));
            } else {
                s.push(None);
                ri.push(None);
            }
        }
        Ok(RiskField {
            cells: baseline.cells.clone(),
            base: baseline.base.clone(),
            s,
            ri,
            travel: baseline.travel.clone(),
        })
    }

    pub fn risk_instance(&self, risk: &RiskField, config: &InstanceConfig) -> Result<Instance> {
        build_instance(
            risk,
            &self.graph,
            &self.association,
            &self.station_cells,
            config,
        )
    }

    /// Population-weighted travel-time instance over every associated cell
    /// that some node can reach.
    pub fn distance_instance(&self, config: &InstanceConfig) -> Result<Instance> {
        let weights = self.layers.require("POP")?;
        let reachable: Vec<bool> = self.association.nodes.iter().map(Option::is_some).collect();
        build_distance_instance(
            weights,
            &reachable,
            &self.graph,
            &self.association,
            &self.station_cells,
            config,
        )
    }
}

/// Cells map to their associated node; a cell beyond the cutoff falls back
/// to the nearest node. Duplicates collapse.
fn station_node_ids(
    grid: &HexGrid,
    graph: &RoadGraph,
    association: &Association,
    cells: &[CellId],
) -> Result<Vec<i64>> {
    let mut ids = BTreeSet::new();
    for &cell in cells {
        let idx = grid.index_of(cell).ok_or_else(|| {
            Error::Reference(format!(
                "station cell ({}, {}) outside the grid",
                cell.q, cell.r
            ))
        })?;
        let node = match association.node_of(idx) {
            Some(v) => v,
            None => {
                let (lat, lon) = grid.center(cell);
                graph
                    .nearest_node(lat, lon)
                    .ok_or_else(|| Error::Argument("empty street graph".into()))?
            }
        };
        ids.insert(graph.node_id(node));
    }
    Ok(ids.into_iter().collect())
}

fn response_times(
    graph: &RoadGraph,
    association: &Association,
    station_nodes: &[i64],
) -> Result<(Option<TravelField>, SttfsLayer)> {
    if station_nodes.is_empty() {
        warn!("region has no stations; every cell is unreachable");
        let sttfs = SttfsLayer {
            seconds: vec![f64::INFINITY; association.len()],
            status: association
                .nodes
                .iter()
                .map(|n| match n {
                    Some(_) => crate::streetnet::Reach::Unreachable,
                    None => crate::streetnet::Reach::Unassociated,
                })
                .collect(),
        };
        return Ok((None, sttfs));
    }
    let field = shortest_times_from(graph, station_nodes)?;
    let sttfs = sttfs_layer(&field, association);
    Ok((Some(field), sttfs))
}

/// Aggregates every bundle input onto `grid`. Missing hazard or value
/// rasters become all-zero layers so the risk model can still run.
pub fn tessellate(bundle: &RegionBundle, grid: HexGrid) -> Result<LayerGrid> {
    let mut layers = LayerGrid::new(grid);
    let n = layers.len();

    let pop = if let Some(points) = bundle.point_sets.get(POPULATION_POINTS) {
        aggregate_points(&layers.grid, points, true)?.values
    } else if let Some(tracts) = bundle.polygon_sets.get(TRACT_POLYGONS) {
        aggregate_polygons(&layers.grid, tracts, Some("POP"))?.values
    } else if let Some(raster) = bundle.rasters.get("POP") {
        aggregate_raster(&layers.grid, raster, RasterStat::Sum)?.values
    } else {
        warn!("no population source; POP is zero");
        vec![0.0; n]
    };
    layers.insert("POP", pop)?;

    for name in MEAN_RASTERS {
        match bundle.rasters.get(name) {
            Some(raster) => {
                let stats = raster_cell_stats(&layers.grid, raster)?;
                let mean = stats
                    .iter()
                    .map(|s| s.as_ref().map_or(0.0, |s| s.mean))
                    .collect();
                layers.insert(name, mean)?;
                layers.insert_stats(name, stats)?;
            }
            None if REQUIRED.contains(&name) => {
                warn!("raster {name} missing; using zeros");
                layers.insert(name, vec![0.0; n])?;
            }
            None => {}
        }
    }

    if let Some(raster) = bundle.rasters.get("LANDCOVER") {
        let mode = aggregate_raster(&layers.grid, raster, RasterStat::Mode)?;
        layers.insert("LANDCOVER", mode.values)?;
        for (category, layer) in aggregate_raster_proportions(&layers.grid, raster)? {
            layers.insert(format!("LANDCOVER_{category}"), layer.values)?;
        }
    }

    let stations = bundle
        .point_sets
        .get(STATION_POINTS)
        .map(|p| aggregate_points(&layers.grid, p, false))
        .transpose()?
        .map_or_else(|| vec![0.0; n], |l| l.values);
    layers.insert("STATIONS", stations)?;

    layers.insert(
        "street_length_m",
        aggregate_polylines(&layers.grid, &street_lines(bundle))?.values,
    )?;

    if let Some(scars) = bundle.polygon_sets.get(FIRE_SCAR_POLYGONS) {
        layers.insert(
            "burned_area_m2",
            aggregate_polygons(&layers.grid, scars, None)?.values,
        )?;
    }
    Ok(layers)
}

/// One segment per street; a two-way pair of edges counts once.
fn street_lines(bundle: &RegionBundle) -> Vec<Vec<(f64, f64)>> {
    let coords: std::collections::HashMap<i64, (f64, f64)> = bundle
        .nodes
        .iter()
        .map(|n| (n.id, (n.lat, n.lon)))
        .collect();
    let pairs: BTreeSet<(i64, i64)> = bundle
        .edges
        .iter()
        .filter(|e| e.from != e.to)
        .map(|e| (e.from.min(e.to), e.from.max(e.to)))
        .collect();
    pairs
        .into_iter()
        .map(|(a, b)| vec![coords[&a], coords[&b]])
        .collect()
}
