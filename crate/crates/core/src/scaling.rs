//! Facility-density scaling: coarse density bins, log-log exponent fits,
//! optimal cost curves against facilities per capita, and a collapse
//! measure for families of such curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hexgrid::{CellId, HexGrid, LayerGrid};
use crate::ingest::{synth_region, RegionBundle, SynthSpec};
use crate::optimizer::{
    greedy_from, solve, solve_warm, Instance, InstanceConfig, Mode, Objective, SolverConfig,
};
use crate::region::Region;
use crate::riskmodel::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBin {
    pub cell: CellId,
    /// People per km².
    pub rho: f64,
    /// Facilities per km².
    pub d: f64,
    /// Fine cells merged into this bin.
    pub cells: usize,
    pub population: f64,
    pub facilities: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBins {
    pub coarse_edge_m: f64,
    pub bins: Vec<DensityBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub beta: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Bins used by the fit.
    pub bins: usize,
    /// Bins dropped for zero population or zero facilities.
    pub excluded: usize,
}

/// Merges fine cells into coarse hexagons sharing the fine grid's origin.
/// Densities divide by the merged fine-cell area, so partly covered coarse
/// hexagons at the region edge are not diluted.
pub fn bin_densities(
    layers: &LayerGrid,
    facilities: &[f64],
    coarse_edge_m: f64,
) -> Result<DensityBins> {
    bin_shifted(layers, facilities, coarse_edge_m, (0.0, 0.0))
}

fn bin_shifted(
    layers: &LayerGrid,
    facilities: &[f64],
    coarse_edge_m: f64,
    shift: (f64, f64),
) -> Result<DensityBins> {
    let pop = layers.require("POP")?;
    if facilities.len() != layers.len() {
        return Err(Error::Alignment(format!(
            "{} facility counts for {} cells",
            facilities.len(),
            layers.len()
        )));
    }
    if !facilities.iter().any(|&f| f > 0.0) {
        return Err(Error::EmptyLayer("no facilities to bin".into()));
    }
    let fine = &layers.grid;
    let coarse = HexGrid::new(fine.origin(), coarse_edge_m, [])?;
    let mut acc: BTreeMap<CellId, (usize, f64, f64)> = BTreeMap::new();
    for (i, &cell) in fine.cells().iter().enumerate() {
        let (x, y) = fine.center_xy(cell);
        let e = acc
            .entry(coarse.cell_at_xy(x + shift.0, y + shift.1))
            .or_default();
        e.0 += 1;
        e.1 += pop[i];
        e.2 += facilities[i];
    }
    let area = fine.cell_area_km2();
    let bins = acc
        .into_iter()
        .map(|(cell, (cells, population, facilities))| {
            let a = cells as f64 * area;
            DensityBin {
                cell,
                rho: population / a,
                d: facilities / a,
                cells,
                population,
                facilities,
            }
        })
        .collect();
    Ok(DensityBins {
        coarse_edge_m,
        bins,
    })
}

/// Ordinary least squares of `ln D` on `ln ρ` over bins with both
/// densities positive.
pub fn fit_beta(bins: &DensityBins) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64)> = bins
        .bins
        .iter()
        .filter(|b| b.rho > 0.0 && b.d > 0.0)
        .map(|b| (b.rho.ln(), b.d.ln()))
        .collect();
    let excluded = bins.bins.len() - pts.len();
    if pts.len() < 3 {
        return Err(Error::Fit(format!(
            "{} usable bins, at least 3 required",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Fit("all bins share one population density".into()));
    }
    let beta = sxy / sxx;
    let intercept = my - beta * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - beta * p.0).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(ScalingFit {
        beta,
        intercept,
        r2,
        bins: pts.len(),
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseAveragedFit {
    pub coarse_edge_m: f64,
    pub beta: f64,
    /// One fit per coarse-grid placement: unshifted, then shifted half an
    /// edge toward each of the six hexagon directions.
    pub fits: Vec<ScalingFit>,
}

/// Mean exponent over seven placements of the coarse grid, which removes
/// most of the dependence on where bin boundaries happen to fall.
pub fn phase_averaged_beta(
    layers: &LayerGrid,
    facilities: &[f64],
    coarse_edge_m: f64,
) -> Result<PhaseAveragedFit> {
    let mut shifts = vec![(0.0, 0.0)];
    for k in 0..6 {
        let a = k as f64 * std::f64::consts::FRAC_PI_3;
        shifts.push((0.5 * coarse_edge_m * a.cos(), 0.5 * coarse_edge_m * a.sin()));
    }
    let fits = shifts
        .into_iter()
        .map(|s| fit_beta(&bin_shifted(layers, facilities, coarse_edge_m, s)?))
        .collect::<Result<Vec<_>>>()?;
    let beta = fits.iter().map(|f| f.beta).sum::<f64>() / fits.len() as f64;
    Ok(PhaseAveragedFit {
        coarse_edge_m,
        beta,
        fits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Population-weighted mean travel seconds to the nearest station.
    Distance,
    /// Optimized mean risk index.
    Risk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    /// `n` divided by total population.
    pub x: f64,
    #[serde(with = "crate::decimal")]
    pub value: f64,
    pub open_cells: Vec<CellId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityCurve {
    pub kind: CurveKind,
    pub population: f64,
    pub points: Vec<CurvePoint>,
}

impl FacilityCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,x,value\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.n, p.x, p.value);
        }
        out
    }

    /// Facility count per region cell, summed over every point of the curve.
    pub fn pooled_facilities(&self, layers: &LayerGrid) -> Vec<f64> {
        let mut counts = vec![0.0; layers.len()];
        for p in &self.points {
            for c in &p.open_cells {
                if let Some(i) = layers.grid.index_of(*c) {
                    counts[i] += 1.0;
                }
            }
        }
        counts
    }
}

fn check_counts(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::Argument("empty facility-count list".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Argument(
            "facility counts must be positive and strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Relocation solves for each count; each step starts from the previous
/// placement completed greedily.
fn sweep(
    base: &Instance,
    n_list: &[usize],
    cfg: &SolverConfig,
    mut value: impl FnMut(&Instance, &crate::optimizer::OptimizationResult) -> f64,
) -> Result<Vec<(usize, f64, Vec<CellId>)>> {
    let mut out = Vec::with_capacity(n_list.len());
    let mut prev: Option<Vec<usize>> = None;
    for &n in n_list {
        if n > base.len() {
            return Err(Error::Infeasible(format!(
                "{n} facilities on {} candidate cells",
                base.len()
            )));
        }
        let inst = base.clone().with_stations(n);
        let r = match &prev {
            Some(open) => solve_warm(&inst, cfg, &greedy_from(&inst, open.clone()))?,
            None => solve(&inst, cfg)?,
        };
        out.push((n, value(&inst, &r), r.open_cells.clone()));
        prev = Some(r.open);
    }
    Ok(out)
}

fn total_population(region: &Region) -> Result<f64> {
    let p: f64 = region.layers.require("POP")?.iter().sum();
    if !(p > 0.0) {
        return Err(Error::Argument("region has no population".into()));
    }
    Ok(p)
}

fn relocate(objective: Objective) -> InstanceConfig {
    InstanceConfig {
        mode: Mode::Relocate,
        objective,
        stations: Some(1),
        ..InstanceConfig::default()
    }
}

/// Optimal population-weighted mean travel time for each facility count.
pub fn optimal_distance_curve(
    region: &Region,
    n_list: &[usize],
    cfg: &SolverConfig,
) -> Result<FacilityCurve> {
    check_counts(n_list)?;
    let population = total_population(region)?;
    let base = region.distance_instance(&relocate(Objective::Avg))?;
    let weight: f64 = base.base().iter().sum();
    let pts = sweep(&base, n_list, cfg, |_, r| {
        r.costs.iter().sum::<f64>() / weight
    })?;
    Ok(FacilityCurve {
        kind: CurveKind::Distance,
        population,
        points: pts
            .into_iter()
            .map(|(n, value, open_cells)| CurvePoint {
                n,
                x: n as f64 / population,
                value,
                open_cells,
            })
            .collect(),
    })
}

/// Optimal mean risk index for each facility count.
pub fn optimal_ri_curve(
    region: &Region,
    scenario: &Scenario,
    n_list: &[usize],
    cfg: &SolverConfig,
) -> Result<FacilityCurve> {
    check_counts(n_list)?;
    let population = total_population(region)?;
    let risk = region.score(scenario)?;
    let base = region.risk_instance(&risk, &relocate(Objective::Avg))?;
    let pts = sweep(&base, n_list, cfg, |_, r| r.objective)?;
    Ok(FacilityCurve {
        kind: CurveKind::Risk,
        population,
        points: pts
            .into_iter()
            .map(|(n, value, open_cells)| CurvePoint {
                n,
                x: n as f64 / population,
                value,
                open_cells,
            })
            .collect(),
    })
}

/// Points on the shared x range at which curves are compared.
pub const COLLAPSE_SAMPLES: usize = 50;

fn interpolate(points: &[CurvePoint], x: f64) -> f64 {
    let k = points.partition_point(|p| p.x < x);
    if k == 0 {
        return points[0].value;
    }
    if k == points.len() {
        return points[k - 1].value;
    }
    let (a, b) = (&points[k - 1], &points[k]);
    if b.x == a.x {
        return b.value;
    }
    a.value + (b.value - a.value) * (x - a.x) / (b.x - a.x)
}

/// RMS over a common x grid of `|v_k(x) − m(x)| / m(x)`, where `m` is the
/// mean of the curves at `x`. Points where every curve is zero count as
/// agreement.
pub fn collapse_deviation(curves: &[FacilityCurve]) -> Result<f64> {
    if curves.len() < 2 {
        return Err(Error::Argument("collapse needs at least two curves".into()));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for c in curves {
        if c.points.is_empty() {
            return Err(Error::Argument("empty curve".into()));
        }
        if c.points.windows(2).any(|w| w[0].x > w[1].x) {
            return Err(Error::Argument("curve x values must ascend".into()));
        }
        lo = lo.max(c.points[0].x);
        hi = hi.min(c.points[c.points.len() - 1].x);
    }
    if lo > hi {
        return Err(Error::Range(format!(
            "curve x ranges do not overlap ({lo} > {hi})"
        )));
    }
    let samples = if lo == hi { 1 } else { COLLAPSE_SAMPLES };
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in 0..samples {
        let x = if samples == 1 {
            lo
        } else {
            lo + (hi - lo) * s as f64 / (samples - 1) as f64
        };
        let values: Vec<f64> = curves.iter().map(|c| interpolate(&c.points, x)).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        for v in values {
            let rel = if mean == 0.0 {
                if v == 0.0 {
                    0.0
                } else {
                    1.0
                }
            } else {
                (v - mean) / mean
            };
            sum += rel * rel;
            count += 1;
        }
    }
    Ok((sum / count as f64).sqrt())
}

/// A synthetic region and its copy scaled `factor` times in each direction
/// at the same street spacing and population density. Both share the
/// relative population and hazard layout.
pub fn homothetic_pair(
    seed: u64,
    n: usize,
    m: usize,
    spec: &SynthSpec,
    factor: usize,
) -> Result<(RegionBundle, RegionBundle)> {
    if factor < 1 {
        return Err(Error::Argument("scale factor must be at least 1".into()));
    }
    let small = synth_region(seed, n, m, spec)?;
    let big_spec = SynthSpec {
        total_population: spec.total_population * (factor * factor) as f64,
        stations: spec.stations * factor * factor,
        ..spec.clone()
    };
    // keep the lattice span proportional: (n−1)·factor + 1 rows
    let big = synth_region(seed, (n - 1) * factor + 1, (m - 1) * factor + 1, &big_spec)?;
    Ok((small, big))
}
