use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bnb;
use super::instance::{Instance, Mode, Objective};
use super::local;
use crate::error::{Error, Result};
use crate::hexgrid::CellId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub time_limit_s: f64,
    /// Largest candidate count solved by branch-and-bound.
    pub exact_threshold: usize,
    /// Local-search starts: one greedy, the rest random.
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            time_limit_s: 3600.0,
            exact_threshold: 60,
            starts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Status {
    Optimal,
    /// Local optimum; `gap` is relative to the combinatorial lower bound.
    Heuristic {
        gap: f64,
    },
    TimeLimit {
        gap: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    BranchAndBound,
    LocalSearch,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// Open candidate indices, ascending.
    pub open: Vec<usize>,
    pub open_cells: Vec<CellId>,
    /// Serving candidate index per demand cell.
    pub assignment: Vec<usize>,
    pub objective_kind: Objective,
    #[serde(with = "crate::decimal")]
    pub objective: f64,
    #[serde(with = "crate::decimal")]
    pub avg: f64,
    #[serde(with = "crate::decimal")]
    pub max: f64,
    #[serde(with = "crate::decimal")]
    pub lower_bound: f64,
    pub status: Status,
    pub solver: SolverKind,
    pub nodes: u64,
    pub wall_seconds: f64,
    /// Assigned cost per demand cell (the optimized risk for risk instances).
    pub costs: Vec<f64>,
}

impl OptimizationResult {
    pub(crate) fn from_open(
        inst: &Instance,
        open: Vec<usize>,
        status: Status,
        solver: SolverKind,
        lower_bound: f64,
        nodes: u64,
        started: Instant,
    ) -> Self {
        let e = inst.evaluate(&open);
        let mut open = open;
        open.sort_unstable();
        OptimizationResult {
            open_cells: open.iter().map(|&i| inst.cells()[i]).collect(),
            open,
            assignment: e.assignment,
            objective_kind: inst.objective,
            objective: e.objective,
            avg: e.avg,
            max: e.max,
            lower_bound,
            status,
            solver,
            nodes,
            wall_seconds: started.elapsed().as_secs_f64(),
            costs: e.costs,
        }
    }
}

fn gap(objective: f64, lb: f64) -> f64 {
    if objective > 0.0 {
        ((objective - lb) / objective).max(0.0)
    } else {
        0.0
    }
}

pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<OptimizationResult> {
    solve_inner(inst, cfg, None)
}

/// Like [`solve`], with a known feasible open set to start from.
pub fn solve_warm(
    inst: &Instance,
    cfg: &SolverConfig,
    warm: &[usize],
) -> Result<OptimizationResult> {
    solve_inner(inst, cfg, Some(warm))
}

fn check_open_set(inst: &Instance, open: &[usize]) -> Result<Vec<usize>> {
    let mut o = open.to_vec();
    o.sort_unstable();
    o.dedup();
    if o.len() != inst.open_count() || o.iter().any(|&i| i >= inst.len()) {
        return Err(Error::Argument(format!(
            "warm start has {} valid stations, {} required",
            o.len(),
            inst.open_count()
        )));
    }
    if inst.fixed.iter().any(|f| o.binary_search(f).is_err()) {
        return Err(Error::Argument("warm start omits a fixed station".into()));
    }
    Ok(o)
}

fn solve_inner(
    inst: &Instance,
    cfg: &SolverConfig,
    warm: Option<&[usize]>,
) -> Result<OptimizationResult> {
    inst.validate()?;
    let started = Instant::now();
    let deadline = started + Duration::from_secs_f64(cfg.time_limit_s.clamp(0.0, 1e9));
    let warm = warm.map(|w| check_open_set(inst, w)).transpose()?;
    let root = bnb::root_bound(inst);

    if inst.len() <= cfg.exact_threshold {
        let incumbent = match warm {
            Some(w) => w,
            None => local::local_search(inst, local::greedy(inst), deadline).open,
        };
        let out = bnb::branch_and_bound(inst, &incumbent, deadline);
        let status = if out.complete {
            Status::Optimal
        } else {
            Status::TimeLimit {
                gap: gap(out.objective, root),
            }
        };
        let lb = if out.complete { out.objective } else { root };
        return Ok(OptimizationResult::from_open(
            inst,
            out.open,
            status,
            SolverKind::BranchAndBound,
            lb,
            out.nodes,
            started,
        ));
    }

    let mut starts = vec![local::greedy(inst)];
    for s in 1..cfg.starts.max(1) {
        let seed = cfg.seed ^ (s as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        starts.push(local::random_start(inst, seed));
    }
    if let Some(w) = warm {
        starts.push(w);
    }
    if inst.mode == Mode::Relocate && inst.current.len() == inst.open_count() {
        starts.push(inst.current.clone());
    }
    let outcomes: Vec<local::LocalOutcome> = starts
        .into_par_iter()
        .map(|s| local::local_search(inst, s, deadline))
        .collect();
    let timed_out = outcomes.iter().any(|o| o.timed_out);
    let iterations: usize = outcomes.iter().map(|o| o.iterations).sum();
    let best = outcomes
        .into_iter()
        .min_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then_with(|| a.open.cmp(&b.open))
        })
        .expect("at least one start");
    let g = gap(best.objective, root);
    let status = if timed_out {
        Status::TimeLimit { gap: g }
    } else {
        Status::Heuristic { gap: g }
    };
    Ok(OptimizationResult::from_open(
        inst,
        best.open,
        status,
        SolverKind::LocalSearch,
        root,
        iterations as u64,
        started,
    ))
}

/// Mean, then max, then weighted objective, each warm-started from the
/// previous solution. A weighted objective on `inst` sets the blend used in
/// the last step.
pub fn solve_chain(inst: &Instance, cfg: &SolverConfig) -> Result<[OptimizationResult; 3]> {
    let weighted = match inst.objective {
        w @ Objective::Weighted { .. } => w,
        _ => Objective::weighted(),
    };
    let avg = solve(&inst.clone().with_objective(Objective::Avg), cfg)?;
    let max = solve_warm(&inst.clone().with_objective(Objective::Max), cfg, &avg.open)?;
    let blend = solve_warm(&inst.clone().with_objective(weighted), cfg, &max.open)?;
    Ok([avg, max, blend])
}

/// Keeps the fixed stations open and places `delta` more.
pub fn add_stations(inst: &Instance, cfg: &SolverConfig) -> Result<OptimizationResult> {
    if inst.mode != Mode::Add {
        return Err(Error::Instance("adding stations requires add mode".into()));
    }
    solve(inst, cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalPoint {
    pub delta: usize,
    #[serde(with = "crate::decimal")]
    pub objective: f64,
    /// Objective decrease relative to `delta − 1`.
    #[serde(with = "crate::decimal")]
    pub gain: f64,
    pub open_cells: Vec<CellId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalCurve {
    pub points: Vec<MarginalPoint>,
    pub eps_rel: f64,
    /// First `delta` whose gain falls below `eps_rel` times the initial
    /// objective.
    pub saturation: Option<usize>,
}

/// Solves the add-mode instance for `delta = 0..=delta_max`, each step
/// starting from the previous placement plus its best single addition.
pub fn marginal_sweep(
    inst: &Instance,
    delta_max: usize,
    eps_rel: f64,
    cfg: &SolverConfig,
) -> Result<MarginalCurve> {
    if delta_max < 1 {
        return Err(Error::Argument(
            "marginal sweep needs delta_max >= 1".into(),
        ));
    }
    if inst.mode != Mode::Add {
        return Err(Error::Instance("marginal sweep requires add mode".into()));
    }
    if inst.fixed.len() + delta_max > inst.len() {
        return Err(Error::Infeasible(format!(
            "{} fixed + {delta_max} added exceeds {} candidates",
            inst.fixed.len(),
            inst.len()
        )));
    }
    let mut points: Vec<MarginalPoint> = Vec::with_capacity(delta_max + 1);
    let mut prev: Option<Vec<usize>> = None;
    for delta in 0..=delta_max {
        let mut step = inst.clone();
        step.delta = delta;
        let r = match &prev {
            Some(open) => {
                let warm = local::greedy_from(&step, open.clone());
                solve_warm(&step, cfg, &warm)?
            }
            None => solve(&step, cfg)?,
        };
        let gain = points.last().map_or(0.0, |p| p.objective - r.objective);
        points.push(MarginalPoint {
            delta,
            objective: r.objective,
            gain,
            open_cells: r.open_cells.clone(),
        });
        prev = Some(r.open);
    }
    let initial = points[0].objective;
    let saturation = points
        .iter()
        .skip(1)
        .find(|p| p.gain < eps_rel * initial)
        .map(|p| p.delta);
    Ok(MarginalCurve {
        points,
        eps_rel,
        saturation,
    })
}
