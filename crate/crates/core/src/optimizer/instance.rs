use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assign;
use crate::error::{Error, Result};
use crate::hexgrid::CellId;
use crate::riskmodel::{Resolved, RiskField};
use crate::streetnet::{dijkstra_distances, Association, RoadGraph, UNREACHABLE};

pub const NO_TRAVEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Choose every station site freely.
    Relocate,
    /// Keep the fixed set open and add `delta` sites.
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// Mean assigned cost over demand cells.
    Avg,
    /// Largest assigned cost.
    Max,
    /// `alpha1·avg + alpha2·max`.
    Weighted { alpha1: f64, alpha2: f64 },
}

impl Objective {
    pub fn weighted() -> Self {
        Objective::Weighted {
            alpha1: 0.5,
            alpha2: 0.5,
        }
    }

    pub fn combine(&self, avg: f64, max: f64) -> f64 {
        match *self {
            Objective::Avg => avg,
            Objective::Max => max,
            Objective::Weighted { alpha1, alpha2 } => alpha1 * avg + alpha2 * max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Objective::Weighted { alpha1, alpha2 } = *self {
            if alpha1 < 0.0 || alpha2 < 0.0 || ((alpha1 + alpha2) - 1.0).abs() > 1e-9 {
                return Err(Error::Spec(format!(
                    "objective weights must be convex, got ({alpha1}, {alpha2})"
                )));
            }
        }
        Ok(())
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "avg" => Ok(Objective::Avg),
            "max" => Ok(Objective::Max),
            "weighted" => Ok(Objective::weighted()),
            other => Err(Error::Argument(format!("unknown objective {other:?}"))),
        }
    }
}

/// Assignment of every demand cell under a given open set.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub avg: f64,
    pub max: f64,
    pub objective: f64,
    /// Serving candidate index per demand cell.
    pub assignment: Vec<usize>,
    pub costs: Vec<f64>,
}

/// Siting problem over a candidate set `I`. Demand cells coincide with the
/// candidates; `cost[i][j]` is the cost of serving `j` from a station at `i`.
#[derive(Debug, Clone)]
pub struct Instance {
    cells: Vec<CellId>,
    base: Vec<f64>,
    cost: Vec<f64>,
    travel_ms: Option<Vec<u32>>,
    nodes: Vec<i64>,
    pub mode: Mode,
    pub objective: Objective,
    /// Number of stations `S`; in add mode the size of the fixed set.
    pub stations: usize,
    /// Fixed open candidates `E`, ascending.
    pub fixed: Vec<usize>,
    pub delta: usize,
    /// Require every open station to serve at least one other cell.
    pub serve_other: bool,
    /// Current station candidates, when known.
    pub current: Vec<usize>,
    /// Region cells left out of the candidate set.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub mode: Mode,
    pub objective: Objective,
    /// Defaults to the number of current station cells.
    #[serde(default)]
    pub stations: Option<usize>,
    #[serde(default)]
    pub delta: usize,
    #[serde(default)]
    pub serve_other: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            mode: Mode::Relocate,
            objective: Objective::Avg,
            stations: None,
            delta: 0,
            serve_other: false,
        }
    }
}

impl Instance {
    /// Raw instance from a dense row-major cost matrix.
    pub fn from_costs(cells: Vec<CellId>, base: Vec<f64>, cost: Vec<f64>) -> Result<Self> {
        let n = cells.len();
        if n == 0 {
            return Err(Error::Instance("instance has no candidate cells".into()));
        }
        if base.len() != n || cost.len() != n * n {
            return Err(Error::Alignment(format!(
                "instance of {n} cells needs {n} base values and {} costs",
                n * n
            )));
        }
        if cells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Instance(
                "candidate cells must be strictly ascending".into(),
            ));
        }
        if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Instance(
                "costs must be finite and nonnegative".into(),
            ));
        }
        Ok(Instance {
            cells,
            base,
            cost,
            travel_ms: None,
            nodes: Vec::new(),
            mode: Mode::Relocate,
            objective: Objective::Avg,
            stations: 1,
            fixed: Vec::new(),
            delta: 0,
            serve_other: false,
            current: Vec::new(),
            excluded: 0,
        })
    }

    /// Risk instance: `cost[i][j] = base_j · s(t(i,j))` with `s(∞) = 1`.
    pub fn from_travel(
        cells: Vec<CellId>,
        base: Vec<f64>,
        travel_ms: Vec<u32>,
        travel: &Resolved,
    ) -> Result<Self> {
        let n = cells.len();
        if travel_ms.len() != n * n {
            return Err(Error::Alignment("travel matrix has the wrong size".into()));
        }
        let cost = travel_ms
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let s = if t == NO_TRAVEL {
                    1.0
                } else {
                    travel.apply(t as f64 / 1000.0)
                };
                base[k % n] * s
            })
            .collect();
        let mut inst = Self::from_costs(cells, base, cost)?;
        inst.travel_ms = Some(travel_ms);
        Ok(inst)
    }

    /// Distance instance: `cost[i][j] = w_j · t(i,j)` in the graph's native
    /// unit. Unreachable pairs cost ten times the largest finite time.
    pub fn from_distance(
        cells: Vec<CellId>,
        weights: Vec<f64>,
        travel_ms: Vec<u32>,
    ) -> Result<Self> {
        let n = cells.len();
        if travel_ms.len() != n * n {
            return Err(Error::Alignment("travel matrix has the wrong size".into()));
        }
        let finite_max = travel_ms
            .iter()
            .filter(|&&t| t != NO_TRAVEL)
            .max()
            .copied()
            .unwrap_or(0) as f64
            / 1000.0;
        let penalty = 10.0 * finite_max.max(1.0);
        let cost = travel_ms
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let d = if t == NO_TRAVEL {
                    penalty
                } else {
                    t as f64 / 1000.0
                };
                weights[k % n] * d
            })
            .collect();
        let mut inst = Self::from_costs(cells, weights, cost)?;
        inst.travel_ms = Some(travel_ms);
        Ok(inst)
    }

    pub fn with_objective(mut self, objective: Objective) -> Self {
        self.objective = objective;
        self
    }

    pub fn with_stations(mut self, stations: usize) -> Self {
        self.stations = stations;
        self
    }

    /// Switches to add mode with `fixed` forced open.
    pub fn with_fixed(mut self, fixed: &[usize], delta: usize) -> Self {
        let mut fixed = fixed.to_vec();
        fixed.sort_unstable();
        fixed.dedup();
        self.mode = Mode::Add;
        self.stations = fixed.len();
        self.fixed = fixed;
        self.delta = delta;
        self
    }

    pub fn with_serve_other(mut self, on: bool) -> Self {
        self.serve_other = on;
        self
    }

    pub fn with_current(mut self, current: &[usize]) -> Self {
        let mut c = current.to_vec();
        c.sort_unstable();
        c.dedup();
        self.current = c;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[CellId] {
        &self.cells
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Node id behind each candidate, when built from a graph.
    pub fn nodes(&self) -> &[i64] {
        &self.nodes
    }

    pub fn index_of(&self, cell: CellId) -> Option<usize> {
        self.cells.binary_search(&cell).ok()
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cells.len() + j]
    }

    #[inline]
    pub(crate) fn cost_row(&self, i: usize) -> &[f64] {
        let n = self.cells.len();
        &self.cost[i * n..(i + 1) * n]
    }

    /// Travel seconds from a station at `i` to `j`, if the instance keeps
    /// travel times.
    pub fn travel_seconds(&self, i: usize, j: usize) -> Option<f64> {
        let t = self.travel_ms.as_ref()?[i * self.cells.len() + j];
        Some(if t == NO_TRAVEL {
            f64::INFINITY
        } else {
            t as f64 / 1000.0
        })
    }

    /// Number of stations open in any solution.
    pub fn open_count(&self) -> usize {
        match self.mode {
            Mode::Relocate => self.stations + self.delta,
            Mode::Add => self.fixed.len() + self.delta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        let n = self.len();
        let p = self.open_count();
        if p == 0 {
            return Err(Error::Instance("at least one station is required".into()));
        }
        if p > n {
            return Err(Error::Infeasible(format!(
                "{p} stations requested but only {n} candidate cells"
            )));
        }
        if self.fixed.iter().any(|&f| f >= n) || self.current.iter().any(|&c| c >= n) {
            return Err(Error::Instance(
                "station index outside the candidate set".into(),
            ));
        }
        match self.mode {
            Mode::Add if self.fixed.is_empty() => Err(Error::Instance(
                "add mode needs a nonempty fixed station set".into(),
            )),
            Mode::Relocate if !self.fixed.is_empty() => Err(Error::Instance(
                "relocate mode takes no fixed stations".into(),
            )),
            _ if self.serve_other && n < 2 => Err(Error::Infeasible(
                "each station must serve another cell, impossible with one candidate".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Nearest-station assignment (ties to the smaller candidate index), or
    /// the optimal constrained assignment when `serve_other` is set.
    pub fn evaluate(&self, open: &[usize]) -> Evaluation {
        let mut open = open.to_vec();
        open.sort_unstable();
        open.dedup();
        if self.serve_other {
            return assign::evaluate_serve_other(self, &open);
        }
        let (assignment, costs) = self.nearest(&open);
        self.finish(assignment, costs)
    }

    pub(crate) fn nearest(&self, open: &[usize]) -> (Vec<usize>, Vec<f64>) {
        let n = self.len();
        let mut assignment = vec![open[0]; n];
        let mut costs: Vec<f64> = self.cost_row(open[0]).to_vec();
        for &i in &open[1..] {
            for (j, &c) in self.cost_row(i).iter().enumerate() {
                if c < costs[j] {
                    costs[j] = c;
                    assignment[j] = i;
                }
            }
        }
        (assignment, costs)
    }

    pub(crate) fn finish(&self, assignment: Vec<usize>, costs: Vec<f64>) -> Evaluation {
        let sum: f64 = costs.iter().sum();
        let avg = sum / costs.len() as f64;
        let max = costs.iter().copied().fold(0.0, f64::max);
        Evaluation {
            avg,
            max,
            objective: self.objective.combine(avg, max),
            assignment,
            costs,
        }
    }
}

/// Candidate set, travel matrix and costs for a scored region. Candidates
/// are the associated cells that have a finite response time.
pub fn build_instance(
    risk: &RiskField,
    graph: &RoadGraph,
    association: &Association,
    current_stations: &[CellId],
    config: &InstanceConfig,
) -> Result<Instance> {
    if association.cells != risk.cells {
        return Err(Error::Alignment("risk field and association differ".into()));
    }
    let keep: Vec<usize> = (0..risk.len())
        .filter(|&i| risk.is_reachable(i) && association.nodes[i].is_some())
        .collect();
    if keep.is_empty() {
        return Err(Error::Instance("no reachable candidate cells".into()));
    }
    let cells: Vec<CellId> = keep.iter().map(|&i| risk.cells[i]).collect();
    let base: Vec<f64> = keep.iter().map(|&i| risk.base[i]).collect();
    let node_idx: Vec<usize> = keep
        .iter()
        .map(|&i| association.nodes[i].unwrap())
        .collect();
    let travel = travel_matrix(graph, &node_idx);
    let mut inst = Instance::from_travel(cells, base, travel, &risk.travel)?;
    inst.nodes = node_idx.iter().map(|&v| graph.node_id(v)).collect();
    inst.excluded = risk.len() - keep.len();
    configure(inst, current_stations, config)
}

/// Distance-objective instance over the same candidate rule, with demand
/// weights (usually population) per region cell.
pub fn build_distance_instance(
    weights: &[f64],
    reachable: &[bool],
    graph: &RoadGraph,
    association: &Association,
    current_stations: &[CellId],
    config: &InstanceConfig,
) -> Result<Instance> {
    let keep: Vec<usize> = (0..association.len())
        .filter(|&i| reachable[i] && association.nodes[i].is_some())
        .collect();
    if keep.is_empty() {
        return Err(Error::Instance("no reachable candidate cells".into()));
    }
    let cells: Vec<CellId> = keep.iter().map(|&i| association.cells[i]).collect();
    let w: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
    let node_idx: Vec<usize> = keep
        .iter()
        .map(|&i| association.nodes[i].unwrap())
        .collect();
    let travel = travel_matrix(graph, &node_idx);
    let mut inst = Instance::from_distance(cells, w, travel)?;
    inst.nodes = node_idx.iter().map(|&v| graph.node_id(v)).collect();
    inst.excluded = association.len() - keep.len();
    configure(inst, current_stations, config)
}

fn configure(
    mut inst: Instance,
    current_stations: &[CellId],
    config: &InstanceConfig,
) -> Result<Instance> {
    let mut current: Vec<usize> = current_stations
        .iter()
        .filter_map(|c| inst.index_of(*c))
        .collect();
    current.sort_unstable();
    current.dedup();
    inst.current = current.clone();
    inst.objective = config.objective;
    inst.serve_other = config.serve_other;
    match config.mode {
        Mode::Relocate => {
            inst.stations = config.stations.unwrap_or(current.len());
            inst.delta = config.delta;
        }
        Mode::Add => {
            inst = inst.with_fixed(&current, config.delta);
        }
    }
    inst.validate()?;
    Ok(inst)
}

/// Dense `t(i,j)` in milliseconds between candidate nodes, one Dijkstra per
/// candidate node.
fn travel_matrix(graph: &RoadGraph, node_idx: &[usize]) -> Vec<u32> {
    let rows: Vec<Vec<u32>> = node_idx
        .par_iter()
        .map(|&src| {
            let d = dijkstra_distances(graph, src);
            node_idx
                .iter()
                .map(|&v| {
                    let t = d[v];
                    if t == UNREACHABLE || t >= NO_TRAVEL as u64 {
                        NO_TRAVEL
                    } else {
                        t as u32
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}
