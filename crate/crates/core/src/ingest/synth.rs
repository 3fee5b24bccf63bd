//! Deterministic synthetic regions: a lattice street network with a
//! Gaussian-blob population field and smooth hazard rasters.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AsciiGrid, EdgeRecord, NodeRecord, PointRecord, RegionBundle};
use crate::error::{Error, Result};
use crate::hexgrid::EARTH_RADIUS_M;

/// Population blob, positioned in fractions of the lattice extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub x: f64,
    pub y: f64,
    /// Standard deviation as a fraction of the larger extent.
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HazardPattern {
    /// Sum of random low-frequency cosine waves.
    Smooth { waves: usize },
    /// Hazard grows with distance from the lattice center.
    Periphery,
    /// Hazard peaks at the lattice center.
    Core,
    /// Same level everywhere, as a fraction of the caps.
    Uniform { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    /// Latitude/longitude of the south-west lattice node.
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub spacing_m: f64,
    pub speed_kmh: f64,
    /// Relative speed perturbation per street, 0 for uniform travel times.
    pub speed_jitter: f64,
    pub total_population: f64,
    /// Explicit blobs; when empty, `random_blobs` are drawn from the seed.
    pub blobs: Vec<Blob>,
    pub random_blobs: usize,
    /// Share of the population spread uniformly over all nodes.
    pub background_share: f64,
    pub hazard: HazardPattern,
    /// Seed for the hazard fields; defaults to the region seed.
    pub hazard_seed: Option<u64>,
    pub ros_max: f64,
    pub fi_max: f64,
    pub stations: usize,
    /// Raster resolution; defaults to half the street spacing.
    pub raster_cellsize_m: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            origin_lat: 34.0,
            origin_lon: -118.0,
            spacing_m: 400.0,
            speed_kmh: 30.0,
            speed_jitter: 0.0,
            total_population: 100_000.0,
            blobs: Vec::new(),
            random_blobs: 3,
            background_share: 0.05,
            hazard: HazardPattern::Smooth { waves: 4 },
            hazard_seed: None,
            ros_max: 9.0,
            fi_max: 4.1,
            stations: 4,
            raster_cellsize_m: None,
        }
    }
}

const POP_SALT: u64 = 0x5eed_0001;
const HAZARD_SALT: u64 = 0x5eed_0002;
const MHV_SALT: u64 = 0x5eed_0003;
const STATION_SALT: u64 = 0x5eed_0004;
const SPEED_SALT: u64 = 0x5eed_0005;

// Synthetic ROS and FI never exceed these, whatever the spec asks for.
const ROS_CEILING: f64 = 9.0;
const FI_CEILING: f64 = 4.1;

fn rng(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Generates an `n`-row by `m`-column lattice region. The output is a pure
/// function of the arguments.
pub fn synth_region(seed: u64, n: usize, m: usize, spec: &SynthSpec) -> Result<RegionBundle> {
    if n < 2 || m < 2 {
        return Err(Error::Argument(format!(
            "synthetic lattice needs n, m >= 2, got {n}x{m}"
        )));
    }
    if !(spec.spacing_m > 0.0) || !(spec.speed_kmh > 0.0) {
        return Err(Error::Argument(
            "spacing_m and speed_kmh must be positive".into(),
        ));
    }
    if !(0.0..1.0).contains(&spec.speed_jitter) {
        return Err(Error::Argument("speed_jitter must lie in [0, 1)".into()));
    }
    if spec.stations > n * m {
        return Err(Error::Argument(format!(
            "{} stations requested on {} nodes",
            spec.stations,
            n * m
        )));
    }

    let deg_per_m_lat = 180.0 / (PI * EARTH_RADIUS_M);
    let deg_per_m_lon = deg_per_m_lat / spec.origin_lat.to_radians().cos();
    let node_id = |r: usize, c: usize| (r * m + c + 1) as i64;
    let fx = |c: usize| c as f64 / (m - 1) as f64;
    let fy = |r: usize| r as f64 / (n - 1) as f64;
    let aspect = (m - 1) as f64 / (n - 1).max(m - 1) as f64;
    let aspect_y = (n - 1) as f64 / (n - 1).max(m - 1) as f64;

    let mut nodes = Vec::with_capacity(n * m);
    for r in 0..n {
        for c in 0..m {
            nodes.push(NodeRecord {
                id: node_id(r, c),
                lat: spec.origin_lat + r as f64 * spec.spacing_m * deg_per_m_lat,
                lon: spec.origin_lon + c as f64 * spec.spacing_m * deg_per_m_lon,
            });
        }
    }

    let mut speed_rng = rng(seed, SPEED_SALT);
    let mut edges = Vec::with_capacity(2 * (2 * n * m - n - m));
    let mut street = |a: i64, b: i64, edges: &mut Vec<EdgeRecord>| {
        let factor = 1.0 + spec.speed_jitter * speed_rng.gen_range(-1.0..1.0);
        let seconds = spec.spacing_m / (spec.speed_kmh * factor / 3.6);
        for (from, to) in [(a, b), (b, a)] {
            edges.push(EdgeRecord {
                from,
                to,
                travel_seconds: seconds,
                length_m: Some(spec.spacing_m),
                class: Some("residential".into()),
            });
        }
    };
    for r in 0..n {
        for c in 0..m {
            if c + 1 < m {
                street(node_id(r, c), node_id(r, c + 1), &mut edges);
            }
            if r + 1 < n {
                street(node_id(r, c), node_id(r + 1, c), &mut edges);
            }
        }
    }

    // population
    let blobs = if spec.blobs.is_empty() {
        let mut pop_rng = rng(seed, POP_SALT);
        (0..spec.random_blobs)
            .map(|_| Blob {
                x: pop_rng.gen_range(0.1..0.9),
                y: pop_rng.gen_range(0.1..0.9),
                sigma: pop_rng.gen_range(0.05..0.2),
                weight: pop_rng.gen_range(0.5..1.5),
            })
            .collect()
    } else {
        spec.blobs.clone()
    };
    let blob_density = |x: f64, y: f64| -> f64 {
        blobs
            .iter()
            .map(|b| {
                let dx = (x - b.x) * aspect;
                let dy = (y - b.y) * aspect_y;
                b.weight * (-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma)).exp()
            })
            .sum()
    };
    let raw: Vec<f64> = (0..n * m)
        .map(|k| blob_density(fx(k % m), fy(k / m)))
        .collect();
    let raw_total: f64 = raw.iter().sum();
    let background = if raw_total > 0.0 {
        spec.background_share.clamp(0.0, 1.0)
    } else {
        1.0
    };
    let per_node_bg = background * spec.total_population / (n * m) as f64;
    let blob_scale = if raw_total > 0.0 {
        (1.0 - background) * spec.total_population / raw_total
    } else {
        0.0
    };
    let population: Vec<PointRecord> = nodes
        .iter()
        .zip(&raw)
        .map(|(node, &v)| PointRecord {
            lat: node.lat,
            lon: node.lon,
            value: Some(per_node_bg + blob_scale * v),
        })
        .collect();

    // rasters
    let cell_m = spec.raster_cellsize_m.unwrap_or(spec.spacing_m / 2.0);
    let cellsize = cell_m * deg_per_m_lat;
    let half_lat = spec.spacing_m * deg_per_m_lat / 2.0;
    let half_lon = spec.spacing_m * deg_per_m_lon / 2.0;
    let south = spec.origin_lat - half_lat;
    let west = spec.origin_lon - half_lon;
    let north = nodes.last().unwrap().lat + half_lat;
    let east = nodes.last().unwrap().lon + half_lon;
    let ncols = ((east - west) / cellsize).ceil() as usize;
    let nrows = ((north - south) / cellsize).ceil() as usize;
    let lat_span = nodes.last().unwrap().lat - spec.origin_lat;
    let lon_span = nodes.last().unwrap().lon - spec.origin_lon;
    let sample_points: Vec<(f64, f64)> = (0..nrows * ncols)
        .map(|i| {
            let (row, col) = (i / ncols, i % ncols);
            let lon = west + (col as f64 + 0.5) * cellsize;
            let lat = south + ((nrows - 1 - row) as f64 + 0.5) * cellsize;
            (
                (lon - spec.origin_lon) / lon_span,
                (lat - spec.origin_lat) / lat_span,
            )
        })
        .collect();

    let hazard_seed = spec.hazard_seed.unwrap_or(seed);
    let mut hazard_rng = rng(hazard_seed, HAZARD_SALT);
    let (ros_field, fi_field) = match &spec.hazard {
        HazardPattern::Smooth { waves } => {
            let a = SmoothField::new(&mut hazard_rng, *waves);
            let b = SmoothField::new(&mut hazard_rng, *waves);
            let fa = normalize(sample_points.iter().map(|&(x, y)| a.eval(x, y)).collect());
            let fb = normalize(sample_points.iter().map(|&(x, y)| b.eval(x, y)).collect());
            let fi = fa.iter().zip(&fb).map(|(p, q)| 0.6 * p + 0.4 * q).collect();
            (fa, fi)
        }
        HazardPattern::Periphery | HazardPattern::Core => {
            let radial: Vec<f64> = sample_points
                .iter()
                .map(|&(x, y)| {
                    let d = (((x - 0.5) * aspect).powi(2) + ((y - 0.5) * aspect_y).powi(2)).sqrt();
                    let max = (0.25 * aspect * aspect + 0.25 * aspect_y * aspect_y).sqrt();
                    (d / max).min(1.0)
                })
                .collect();
            let f: Vec<f64> = if matches!(spec.hazard, HazardPattern::Core) {
                radial.iter().map(|d| 1.0 - d).collect()
            } else {
                radial
            };
            (f.clone(), f)
        }
        HazardPattern::Uniform { level } => {
            let level = level.clamp(0.0, 1.0);
            (vec![level; nrows * ncols], vec![level; nrows * ncols])
        }
    };
    let ros_max = spec.ros_max.clamp(0.0, ROS_CEILING);
    let fi_max = spec.fi_max.clamp(0.0, FI_CEILING);

    let mut mhv_rng = rng(seed, MHV_SALT);
    let mhv_shape = SmoothField::new(&mut mhv_rng, 3);
    let mhv_field = normalize(
        sample_points
            .iter()
            .map(|&(x, y)| mhv_shape.eval(x, y))
            .collect(),
    );

    let raster = |values: Vec<f64>| AsciiGrid {
        ncols,
        nrows,
        xllcorner: west,
        yllcorner: south,
        cellsize,
        nodata: -9999.0,
        values,
    };
    let mut rasters = BTreeMap::new();
    rasters.insert(
        "ROS".to_string(),
        raster(ros_field.iter().map(|f| f * ros_max).collect()),
    );
    rasters.insert(
        "FI".to_string(),
        raster(fi_field.iter().map(|f| f * fi_max).collect()),
    );
    rasters.insert(
        "MHV".to_string(),
        raster(
            mhv_field
                .iter()
                .map(|f| 150_000.0 + 850_000.0 * f)
                .collect(),
        ),
    );

    let mut station_rng = rng(seed, STATION_SALT);
    let mut picked = rand::seq::index::sample(&mut station_rng, n * m, spec.stations).into_vec();
    picked.sort_unstable();
    let stations = picked
        .into_iter()
        .map(|k| PointRecord {
            lat: nodes[k].lat,
            lon: nodes[k].lon,
            value: None,
        })
        .collect();

    let mut point_sets = BTreeMap::new();
    point_sets.insert("population".to_string(), population);
    point_sets.insert("stations".to_string(), stations);

    Ok(RegionBundle {
        name: format!("synth-{seed}-{n}x{m}"),
        nodes,
        edges,
        rasters,
        point_sets,
        polygon_sets: BTreeMap::new(),
    })
}

struct SmoothField {
    waves: Vec<(f64, f64, f64, f64)>,
}

impl SmoothField {
    fn new(rng: &mut ChaCha8Rng, count: usize) -> Self {
        let waves = (0..count.max(1))
            .map(|_| {
                (
                    rng.gen_range(0.5..1.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        SmoothField { waves }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        self.waves
            .iter()
            .map(|&(a, kx, ky, phase)| a * (2.0 * PI * (kx * x + ky * y) + phase).cos())
            .sum()
    }
}

fn normalize(values: Vec<f64>) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![0.0; values.len()];
    }
    values.into_iter().map(|v| (v - lo) / (hi - lo)).collect()
}
