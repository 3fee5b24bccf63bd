//! Zonal aggregation of points, rasters, polylines and polygons onto the
//! hexagon cells.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::clip::{clip_segment_length, polygon_area, polygon_clip_area};
use super::{CellId, CellStats, HexGrid, Layer};
use crate::error::{Error, Result};
use crate::ingest::{AsciiGrid, PointRecord, PolygonFeature};

/// Per-hexagon statistic over the raster samples whose centers fall in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RasterStat {
    Mean,
    Sum,
    Mode,
    Min,
    Max,
    Std,
    Median,
    Count,
}

impl RasterStat {
    fn pick(self, s: &CellStats) -> f64 {
        match self {
            RasterStat::Mean => s.mean,
            RasterStat::Sum => s.sum,
            RasterStat::Mode => s.mode,
            RasterStat::Min => s.min,
            RasterStat::Max => s.max,
            RasterStat::Std => s.std,
            RasterStat::Median => s.median,
            RasterStat::Count => s.count as f64,
        }
    }
}

impl std::str::FromStr for RasterStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mean" => RasterStat::Mean,
            "sum" => RasterStat::Sum,
            "mode" => RasterStat::Mode,
            "min" => RasterStat::Min,
            "max" => RasterStat::Max,
            "std" => RasterStat::Std,
            "median" => RasterStat::Median,
            "count" => RasterStat::Count,
            other => {
                return Err(Error::Argument(format!(
                    "unknown raster statistic `{other}`"
                )))
            }
        })
    }
}

/// Counts points per cell, or sums their values when `weighted` is set
/// (points without a value count as zero).
pub fn aggregate_points(grid: &HexGrid, points: &[PointRecord], weighted: bool) -> Result<Layer> {
    let mut layer = Layer::zeros(grid.len());
    let mut touched = vec![false; grid.len()];
    for p in points {
        let w = if weighted {
            p.value.unwrap_or(0.0)
        } else {
            1.0
        };
        let cell = grid.point_to_cell(p.lat, p.lon)?;
        match grid.index_of(cell) {
            Some(i) => {
                layer.values[i] += w;
                touched[i] = true;
            }
            None => layer.outside += w,
        }
    }
    layer.missing = touched.iter().filter(|t| !**t).count();
    Ok(layer)
}

fn raster_samples(grid: &HexGrid, raster: &AsciiGrid) -> Result<(Vec<Vec<f64>>, usize, f64)> {
    raster
        .validate()
        .map_err(|e| Error::Argument(format!("raster: {e}")))?;
    let mut samples = vec![Vec::new(); grid.len()];
    let mut outside_count = 0;
    let mut outside_sum = 0.0;
    for (lat, lon, v) in raster.valid_cells() {
        let (x, y) = grid.project_unchecked(lat, lon);
        match grid.index_of(grid.cell_at_xy(x, y)) {
            Some(i) => samples[i].push(v),
            None => {
                outside_count += 1;
                outside_sum += v;
            }
        }
    }
    if samples.iter().all(Vec::is_empty) {
        return Err(Error::EmptyLayer(
            "no valid raster cell center falls inside the grid".into(),
        ));
    }
    Ok((samples, outside_count, outside_sum))
}

/// Full per-cell statistics of the raster samples; `None` where a cell got
/// no sample.
pub fn raster_cell_stats(grid: &HexGrid, raster: &AsciiGrid) -> Result<Vec<Option<CellStats>>> {
    let (samples, _, _) = raster_samples(grid, raster)?;
    Ok(samples.iter().map(|s| CellStats::from_samples(s)).collect())
}

/// One statistic per cell. Each valid raster cell is assigned to the
/// hexagon containing its center. Cells without samples hold 0 and are
/// counted in `missing`; `outside` holds the value sum (for `Sum`) or the
/// sample count (otherwise) that missed the cell set.
pub fn aggregate_raster(grid: &HexGrid, raster: &AsciiGrid, stat: RasterStat) -> Result<Layer> {
    let (samples, outside_count, outside_sum) = raster_samples(grid, raster)?;
    let mut layer = Layer::zeros(grid.len());
    layer.missing = 0;
    for (i, s) in samples.iter().enumerate() {
        match CellStats::from_samples(s) {
            Some(st) => layer.values[i] = stat.pick(&st),
            None => layer.missing += 1,
        }
    }
    layer.outside = if stat == RasterStat::Sum {
        outside_sum
    } else {
        outside_count as f64
    };
    Ok(layer)
}

/// Fraction of each categorical value per cell, keyed by category in
/// ascending order.
pub fn aggregate_raster_proportions(
    grid: &HexGrid,
    raster: &AsciiGrid,
) -> Result<Vec<(f64, Layer)>> {
    let (samples, outside_count, _) = raster_samples(grid, raster)?;
    let mut categories: Vec<f64> = samples.iter().flatten().copied().collect();
    categories.sort_by(f64::total_cmp);
    categories.dedup();

    let mut out: Vec<(f64, Layer)> = categories
        .iter()
        .map(|&c| {
            let mut l = Layer::zeros(grid.len());
            l.missing = 0;
            (c, l)
        })
        .collect();
    for (i, s) in samples.iter().enumerate() {
        if s.is_empty() {
            for (_, l) in out.iter_mut() {
                l.missing += 1;
            }
            continue;
        }
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for v in s {
            let k = categories.binary_search_by(|c| c.total_cmp(v)).unwrap();
            *counts.entry(k).or_default() += 1;
        }
        for (k, n) in counts {
            out[k].1.values[i] = n as f64 / s.len() as f64;
        }
    }
    for (_, l) in out.iter_mut() {
        l.outside = outside_count as f64;
    }
    Ok(out)
}

/// Meters of line per cell. Lines are (lat, lon) vertex lists; every
/// segment is clipped against the hexagons it crosses.
pub fn aggregate_polylines(grid: &HexGrid, lines: &[Vec<(f64, f64)>]) -> Result<Layer> {
    let mut layer = Layer::zeros(grid.len());
    let mut touched = vec![false; grid.len()];
    let mut total = 0.0;
    let step = grid.edge_m() / 4.0;
    let mut candidates: HashSet<CellId> = HashSet::new();
    for line in lines {
        let projected: Vec<(f64, f64)> = line
            .iter()
            .map(|&(lat, lon)| grid.project(lat, lon))
            .collect::<Result<_>>()?;
        for seg in projected.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let len = (b.0 - a.0).hypot(b.1 - a.1);
            if len == 0.0 {
                continue;
            }
            total += len;
            // any hexagon the segment enters is the cell of a sample point
            // at most edge/4 away, or one of its neighbors
            candidates.clear();
            let samples = (len / step).ceil() as usize;
            for k in 0..=samples {
                let t = k as f64 / samples as f64;
                let cell = grid.cell_at_xy(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
                candidates.insert(cell);
                candidates.extend(cell.neighbors());
            }
            let mut sorted: Vec<CellId> = candidates.iter().copied().collect();
            sorted.sort_unstable();
            for cell in sorted {
                if let Some(i) = grid.index_of(cell) {
                    let inside = clip_segment_length(a, b, &grid.hexagon(cell));
                    if inside > 0.0 {
                        layer.values[i] += inside;
                        touched[i] = true;
                    }
                }
            }
        }
    }
    layer.outside = (total - layer.total()).max(0.0);
    layer.missing = touched.iter().filter(|t| !**t).count();
    Ok(layer)
}

struct Overlap {
    area: f64,
    cells: Vec<(usize, f64)>,
}

fn polygon_overlap(grid: &HexGrid, feature: &PolygonFeature) -> Result<Overlap> {
    let project_ring = |ring: &[[f64; 2]]| -> Result<Vec<(f64, f64)>> {
        ring.iter()
            .map(|&[lon, lat]| grid.project(lat, lon))
            .collect()
    };
    let mut area = 0.0;
    let mut per_cell: BTreeMap<usize, f64> = BTreeMap::new();
    let e = grid.edge_m();
    for part in &feature.parts {
        let exterior = project_ring(&part.exterior)?;
        let holes: Vec<Vec<(f64, f64)>> = part
            .holes
            .iter()
            .map(|h| project_ring(h))
            .collect::<Result<_>>()?;
        area += polygon_area(&exterior).abs()
            - holes.iter().map(|h| polygon_area(h).abs()).sum::<f64>();

        let (mut xmin, mut ymin) = (f64::INFINITY, f64::INFINITY);
        let (mut xmax, mut ymax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &exterior {
            xmin = xmin.min(x);
            ymin = ymin.min(y);
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
        for cell in grid.cells_near_rect(xmin - e, ymin - e, xmax + e, ymax + e) {
            let Some(i) = grid.index_of(cell) else {
                continue;
            };
            let hex = grid.hexagon(cell);
            let mut inter = polygon_clip_area(&exterior, &hex);
            if inter == 0.0 {
                continue;
            }
            for h in &holes {
                inter -= polygon_clip_area(h, &hex);
            }
            if inter > 0.0 {
                *per_cell.entry(i).or_default() += inter;
            }
        }
    }
    Ok(Overlap {
        area,
        cells: per_cell.into_iter().collect(),
    })
}

/// Intersection area (m²) per cell, or with `value_attr`, areal
/// interpolation of that attribute: each cell gets
/// `attr · intersection / polygon area`.
pub fn aggregate_polygons(
    grid: &HexGrid,
    features: &[PolygonFeature],
    value_attr: Option<&str>,
) -> Result<Layer> {
    let mut layer = Layer::zeros(grid.len());
    let mut touched = vec![false; grid.len()];
    let mut total = 0.0;
    for (idx, feature) in features.iter().enumerate() {
        let overlap = polygon_overlap(grid, feature)?;
        let scale = match value_attr {
            None => 1.0,
            Some(attr) => {
                let value = feature.number(attr).ok_or_else(|| {
                    Error::Argument(format!("feature {idx} has no numeric attribute `{attr}`"))
                })?;
                if !(overlap.area > 0.0) {
                    return Err(Error::Geometry(format!(
                        "feature {idx} has zero area; cannot interpolate `{attr}`"
                    )));
                }
                value / overlap.area
            }
        };
        total += overlap.area * scale;
        for (i, inter) in overlap.cells {
            layer.values[i] += inter * scale;
            touched[i] = true;
        }
    }
    layer.outside = total - layer.total();
    layer.missing = touched.iter().filter(|t| !**t).count();
    Ok(layer)
}

/// Area-weighted mean of an intensive attribute (e.g. median house value)
/// over the polygons overlapping each cell.
pub fn aggregate_polygons_mean(
    grid: &HexGrid,
    features: &[PolygonFeature],
    attr: &str,
) -> Result<Layer> {
    let mut weighted = vec![0.0; grid.len()];
    let mut weights = vec![0.0; grid.len()];
    for (idx, feature) in features.iter().enumerate() {
        let value = feature.number(attr).ok_or_else(|| {
            Error::Argument(format!("feature {idx} has no numeric attribute `{attr}`"))
        })?;
        for (i, inter) in polygon_overlap(grid, feature)?.cells {
            weighted[i] += value * inter;
            weights[i] += inter;
        }
    }
    let mut layer = Layer::zeros(grid.len());
    layer.missing = 0;
    for i in 0..grid.len() {
        if weights[i] > 0.0 {
            layer.values[i] = weighted[i] / weights[i];
        } else {
            layer.missing += 1;
        }
    }
    Ok(layer)
}
