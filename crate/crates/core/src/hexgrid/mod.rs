//! Planar hexagonal tessellation.
//!
//! Cells are regular pointy-top hexagons addressed by axial coordinates on
//! a local equirectangular projection anchored at the grid origin. Every
//! cell has exactly the same area, `3√3/2 · edge²`.

mod aggregate;
mod clip;
mod export;
mod layers;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use aggregate::{
    aggregate_points, aggregate_polygons, aggregate_polygons_mean, aggregate_polylines,
    aggregate_raster, aggregate_raster_proportions, raster_cell_stats, RasterStat,
};
pub use clip::{clip_segment_length, polygon_area, polygon_clip_area};
pub use export::{hexagons_geojson, layers_csv};
pub use layers::{CellStats, Layer, LayerGrid};

/// Mean Earth radius used by the local projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Points farther than this from the origin are rejected by the projection.
pub const PROJECTION_LIMIT_M: f64 = 500_000.0;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Axial hexagon address. Ordering (q, then r) is the tie-break order used
/// throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId {
    pub q: i32,
    pub r: i32,
}

impl CellId {
    pub const fn new(q: i32, r: i32) -> Self {
        CellId { q, r }
    }

    pub fn neighbors(self) -> [CellId; 6] {
        let CellId { q, r } = self;
        [
            CellId::new(q + 1, r),
            CellId::new(q - 1, r),
            CellId::new(q, r + 1),
            CellId::new(q, r - 1),
            CellId::new(q + 1, r - 1),
            CellId::new(q - 1, r + 1),
        ]
    }

    /// Hex distance in steps.
    pub fn distance(self, other: CellId) -> u32 {
        let dq = (self.q - other.q) as i64;
        let dr = (self.r - other.r) as i64;
        ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
    }
}

impl std::fmt::Display for CellId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.q, self.r)
    }
}

#[derive(Debug, Clone)]
pub struct HexGrid {
    origin_lat: f64,
    origin_lon: f64,
    edge_m: f64,
    cos_lat0: f64,
    cells: Vec<CellId>,
    index: HashMap<CellId, usize>,
}

impl PartialEq for HexGrid {
    fn eq(&self, other: &Self) -> bool {
        self.origin_lat == other.origin_lat
            && self.origin_lon == other.origin_lon
            && self.edge_m == other.edge_m
            && self.cells == other.cells
    }
}

impl HexGrid {
    pub fn new(
        origin: (f64, f64),
        edge_m: f64,
        cells: impl IntoIterator<Item = CellId>,
    ) -> Result<Self> {
        if !(edge_m > 0.0) || !edge_m.is_finite() {
            return Err(Error::Argument(format!(
                "hexagon edge must be positive, got {edge_m}"
            )));
        }
        let (lat, lon) = origin;
        if !(-89.0..=89.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Range(format!("grid origin ({lat}, {lon})")));
        }
        let mut cells: Vec<CellId> = cells.into_iter().collect();
        cells.sort_unstable();
        cells.dedup();
        let index = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Ok(HexGrid {
            origin_lat: lat,
            origin_lon: lon,
            edge_m,
            cos_lat0: lat.to_radians().cos(),
            cells,
            index,
        })
    }

    /// Grid whose cells cover the bounding box of `points` (lat, lon),
    /// anchored at the box center.
    pub fn covering(points: &[(f64, f64)], edge_m: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Argument("cannot tessellate an empty extent".into()));
        }
        let (mut south, mut north) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut west, mut east) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(lat, lon) in points {
            south = south.min(lat);
            north = north.max(lat);
            west = west.min(lon);
            east = east.max(lon);
        }
        let origin = ((south + north) / 2.0, (west + east) / 2.0);
        Self::covering_bbox(origin, edge_m, (south, west), (north, east))
    }

    /// Every cell containing some point of the box, plus a ring of cells
    /// whose centers lie within one edge length of it.
    pub fn covering_bbox(
        origin: (f64, f64),
        edge_m: f64,
        south_west: (f64, f64),
        north_east: (f64, f64),
    ) -> Result<Self> {
        let probe = HexGrid::new(origin, edge_m, [])?;
        let (x0, y0) = probe.project(south_west.0, south_west.1)?;
        let (x1, y1) = probe.project(north_east.0, north_east.1)?;
        let cells = probe.cells_near_rect(x0 - edge_m, y0 - edge_m, x1 + edge_m, y1 + edge_m);
        HexGrid::new(origin, edge_m, cells)
    }

    /// Same extent and origin, different edge length.
    pub fn retessellate(&self, edge_m: f64) -> Result<Self> {
        let mut xmin = f64::INFINITY;
        let mut ymin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for &cell in &self.cells {
            for (x, y) in self.hexagon(cell) {
                xmin = xmin.min(x);
                ymin = ymin.min(y);
                xmax = xmax.max(x);
                ymax = ymax.max(y);
            }
        }
        let fresh = HexGrid::new(self.origin(), edge_m, [])?;
        let cells =
            fresh.cells_near_rect(xmin - edge_m, ymin - edge_m, xmax + edge_m, ymax + edge_m);
        HexGrid::new(self.origin(), edge_m, cells)
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_lat, self.origin_lon)
    }

    pub fn edge_m(&self) -> f64 {
        self.edge_m
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index_of(&self, cell: CellId) -> Option<usize> {
        self.index.get(&cell).copied()
    }

    pub fn contains(&self, cell: CellId) -> bool {
        self.index.contains_key(&cell)
    }

    /// Cell area in square kilometers; identical for every cell.
    pub fn cell_area_km2(&self) -> f64 {
        cell_area_km2(self.edge_m)
    }

    pub fn cell_area_m2(&self) -> f64 {
        1.5 * SQRT3 * self.edge_m * self.edge_m
    }

    /// Local equirectangular projection to meters east/north of the origin.
    pub fn project(&self, lat: f64, lon: f64) -> Result<(f64, f64)> {
        let (x, y) = self.project_unchecked(lat, lon);
        let dist = x.hypot(y);
        if !(dist <= PROJECTION_LIMIT_M) {
            return Err(Error::Projection {
                lat,
                lon,
                distance_km: dist / 1000.0,
                limit_km: PROJECTION_LIMIT_M / 1000.0,
            });
        }
        Ok((x, y))
    }

    pub(crate) fn project_unchecked(&self, lat: f64, lon: f64) -> (f64, f64) {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let x = k * (lon - self.origin_lon) * self.cos_lat0;
        let y = k * (lat - self.origin_lat);
        (x, y)
    }

    pub fn unproject(&self, x: f64, y: f64) -> (f64, f64) {
        let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        (
            self.origin_lat + y / k,
            self.origin_lon + x / (k * self.cos_lat0),
        )
    }

    /// Planar center of a cell.
    pub fn center_xy(&self, cell: CellId) -> (f64, f64) {
        let e = self.edge_m;
        (
            e * SQRT3 * (cell.q as f64 + cell.r as f64 / 2.0),
            e * 1.5 * cell.r as f64,
        )
    }

    /// Cell center as (lat, lon).
    pub fn center(&self, cell: CellId) -> (f64, f64) {
        let (x, y) = self.center_xy(cell);
        self.unproject(x, y)
    }

    /// Counter-clockwise planar vertices of a cell's hexagon.
    pub fn hexagon(&self, cell: CellId) -> [(f64, f64); 6] {
        let (cx, cy) = self.center_xy(cell);
        let e = self.edge_m;
        let mut out = [(0.0, 0.0); 6];
        for (k, v) in out.iter_mut().enumerate() {
            let angle = (30.0 + 60.0 * k as f64).to_radians();
            *v = (cx + e * angle.cos(), cy + e * angle.sin());
        }
        out
    }

    /// Cell containing a planar point. Boundary points go to the cell
    /// selected by cube rounding.
    pub fn cell_at_xy(&self, x: f64, y: f64) -> CellId {
        let q = (SQRT3 / 3.0 * x - y / 3.0) / self.edge_m;
        let r = (2.0 / 3.0 * y) / self.edge_m;
        cube_round(q, r)
    }

    /// Cell containing (lat, lon), whether or not it belongs to the grid's
    /// cell set.
    pub fn point_to_cell(&self, lat: f64, lon: f64) -> Result<CellId> {
        let (x, y) = self.project(lat, lon)?;
        Ok(self.cell_at_xy(x, y))
    }

    /// All cells whose centers fall inside the planar rectangle.
    pub(crate) fn cells_near_rect(
        &self,
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    ) -> Vec<CellId> {
        let e = self.edge_m;
        let r_lo = (ymin / (1.5 * e)).floor() as i32;
        let r_hi = (ymax / (1.5 * e)).ceil() as i32;
        let mut out = Vec::new();
        for r in r_lo..=r_hi {
            let cy = 1.5 * e * r as f64;
            if cy < ymin || cy > ymax {
                continue;
            }
            let q_lo = (xmin / (e * SQRT3) - r as f64 / 2.0).floor() as i32;
            let q_hi = (xmax / (e * SQRT3) - r as f64 / 2.0).ceil() as i32;
            for q in q_lo..=q_hi {
                let cell = CellId::new(q, r);
                let (cx, _) = self.center_xy(cell);
                if cx >= xmin && cx <= xmax {
                    out.push(cell);
                }
            }
        }
        out
    }
}

pub fn cell_area_km2(edge_m: f64) -> f64 {
    1.5 * SQRT3 * edge_m * edge_m * 1e-6
}

/// Edge length giving a target cell area.
pub fn edge_for_area_km2(area_km2: f64) -> f64 {
    (area_km2 * 1e6 / (1.5 * SQRT3)).sqrt()
}

fn cube_round(q: f64, r: f64) -> CellId {
    let s = -q - r;
    let mut rq = q.round();
    let mut rr = r.round();
    let rs = s.round();
    let dq = (rq - q).abs();
    let dr = (rr - r).abs();
    let ds = (rs - s).abs();
    if dq > dr && dq > ds {
        rq = -rr - rs;
    } else if dr > ds {
        rr = -rq - rs;
    }
    CellId::new(rq as i32, rr as i32)
}
