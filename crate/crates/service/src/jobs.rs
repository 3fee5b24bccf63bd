use hazgrid::hexgrid::CellId;
use hazgrid::optimizer::{
    marginal_sweep, solve, InstanceConfig, MarginalCurve, Mode, Objective, OptimizationResult,
    SolverConfig,
};
use hazgrid::region::Region;
use hazgrid::riskmodel::{RiskField, RiskSummary, Scenario};
use hazgrid::scaling::{
    optimal_distance_curve, optimal_ri_curve, phase_averaged_beta, CurveKind, FacilityCurve,
    PhaseAveragedFit,
};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

/// A scenario given inline or by preset name.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScenarioInput {
    Preset { preset: String },
    Full(Scenario),
}

impl Default for ScenarioInput {
    fn default() -> Self {
        ScenarioInput::Full(Scenario::default())
    }
}

impl ScenarioInput {
    pub fn resolve(self) -> ApiResult<Scenario> {
        let s = match self {
            ScenarioInput::Preset { preset } => Scenario::preset(&preset)?,
            ScenarioInput::Full(s) => s,
        };
        s.validate()?;
        Ok(s)
    }
}

/// `"avg"`, `"max"`, `"weighted"` or the tagged object form.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ObjectiveInput {
    Name(String),
    Full(Objective),
}

impl Default for ObjectiveInput {
    fn default() -> Self {
        ObjectiveInput::Full(Objective::Avg)
    }
}

impl ObjectiveInput {
    fn resolve(self) -> ApiResult<Objective> {
        let o = match self {
            ObjectiveInput::Name(n) => Objective::parse(&n)?,
            ObjectiveInput::Full(o) => o,
        };
        o.validate()?;
        Ok(o)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    Risk,
    /// Population-weighted travel time.
    Distance,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JobRequest {
    Optimize {
        #[serde(default)]
        scenario: ScenarioInput,
        #[serde(default = "relocate")]
        mode: Mode,
        #[serde(default)]
        objective: ObjectiveInput,
        #[serde(default)]
        stations: Option<usize>,
        #[serde(default)]
        delta: usize,
        #[serde(default)]
        serve_other: bool,
        #[serde(default)]
        cost: CostKind,
        #[serde(default)]
        solver: SolverConfig,
    },
    Sweep {
        #[serde(default)]
        scenario: ScenarioInput,
        #[serde(default)]
        objective: ObjectiveInput,
        delta_max: usize,
        #[serde(default = "default_eps")]
        eps_rel: f64,
        #[serde(default)]
        solver: SolverConfig,
    },
    Scaling {
        #[serde(default)]
        scenario: ScenarioInput,
        n_list: Vec<usize>,
        #[serde(default = "distance_curve")]
        curve: CurveKind,
        #[serde(default = "default_coarse_edge")]
        coarse_edge_m: f64,
        #[serde(default)]
        solver: SolverConfig,
    },
}

fn relocate() -> Mode {
    Mode::Relocate
}

fn default_eps() -> f64 {
    0.01
}

fn distance_curve() -> CurveKind {
    CurveKind::Distance
}

fn default_coarse_edge() -> f64 {
    2000.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Optimize,
    Sweep,
    Scaling,
}

/// A request with every default filled in and every cheap check done.
#[derive(Debug, Clone)]
pub enum ValidJob {
    Optimize {
        scenario: Scenario,
        instance: InstanceConfig,
        cost: CostKind,
        solver: SolverConfig,
    },
    Sweep {
        scenario: Scenario,
        objective: Objective,
        delta_max: usize,
        eps_rel: f64,
        solver: SolverConfig,
    },
    Scaling {
        scenario: Scenario,
        n_list: Vec<usize>,
        curve: CurveKind,
        coarse_edge_m: f64,
        solver: SolverConfig,
    },
}

fn check_solver(s: &SolverConfig) -> ApiResult<()> {
    if !(s.time_limit_s > 0.0) {
        return Err(ApiError::bad_request(
            "solver.time_limit_s must be positive",
        ));
    }
    Ok(())
}

impl JobRequest {
    pub fn validate(self) -> ApiResult<ValidJob> {
        Ok(match self {
            JobRequest::Optimize {
                scenario,
                mode,
                objective,
                stations,
                delta,
                serve_other,
                cost,
                solver,
            } => {
                check_solver(&solver)?;
                if stations == Some(0) {
                    return Err(ApiError::bad_request("stations must be positive"));
                }
                ValidJob::Optimize {
                    scenario: scenario.resolve()?,
                    instance: InstanceConfig {
                        mode,
                        objective: objective.resolve()?,
                        stations,
                        delta,
                        serve_other,
                    },
                    cost,
                    solver,
                }
            }
            JobRequest::Sweep {
                scenario,
                objective,
                delta_max,
                eps_rel,
                solver,
            } => {
                check_solver(&solver)?;
                if delta_max == 0 {
                    return Err(ApiError::bad_request("delta_max must be at least 1"));
                }
                if !(eps_rel >= 0.0) {
                    return Err(ApiError::bad_request("eps_rel must be nonnegative"));
                }
                ValidJob::Sweep {
                    scenario: scenario.resolve()?,
                    objective: objective.resolve()?,
                    delta_max,
                    eps_rel,
                    solver,
                }
            }
            JobRequest::Scaling {
                scenario,
                n_list,
                curve,
                coarse_edge_m,
                solver,
            } => {
                check_solver(&solver)?;
                if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(ApiError::bad_request(
                        "n_list must be positive and strictly ascending",
                    ));
                }
                if !(coarse_edge_m > 0.0) {
                    return Err(ApiError::bad_request("coarse_edge_m must be positive"));
                }
                ValidJob::Scaling {
                    scenario: scenario.resolve()?,
                    n_list,
                    curve,
                    coarse_edge_m,
                    solver,
                }
            }
        })
    }
}

impl ValidJob {
    pub fn kind(&self) -> JobKind {
        match self {
            ValidJob::Optimize { .. } => JobKind::Optimize,
            ValidJob::Sweep { .. } => JobKind::Sweep,
            ValidJob::Scaling { .. } => JobKind::Scaling,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeOutput {
    pub cost: CostKind,
    pub optimization: OptimizationResult,
    pub stations_before: Vec<CellId>,
    pub stations_after: Vec<CellId>,
    pub baseline: RiskSummary,
    pub optimized: RiskSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingOutput {
    pub curve: FacilityCurve,
    /// Present for distance curves when enough bins hold facilities.
    pub fit: Option<PhaseAveragedFit>,
    pub fit_error: Option<String>,
}

/// What a finished job leaves behind for the compare and marginal views.
#[derive(Debug, Clone)]
pub enum Artifact {
    Optimize {
        output: OptimizeOutput,
        baseline: RiskField,
        optimized: RiskField,
    },
    Sweep(MarginalCurve),
    Scaling(ScalingOutput),
}

impl Artifact {
    pub fn result_json(&self) -> serde_json::Value {
        let v = match self {
            Artifact::Optimize { output, .. } => serde_json::to_value(output),
            Artifact::Sweep(curve) => serde_json::to_value(curve),
            Artifact::Scaling(out) => serde_json::to_value(out),
        };
        v.expect("job output serializes")
    }
}

pub fn run(region: &Region, job: &ValidJob) -> hazgrid::Result<Artifact> {
    match job {
        ValidJob::Optimize {
            scenario,
            instance,
            cost,
            solver,
        } => {
            let baseline = region.score(scenario)?;
            let inst = match cost {
                CostKind::Risk => region.risk_instance(&baseline, instance)?,
                CostKind::Distance => region.distance_instance(instance)?,
            };
            let optimization = solve(&inst, solver)?;
            let optimized = region.rescore(&baseline, &optimization.open_cells)?;
            let output = OptimizeOutput {
                cost: *cost,
                stations_before: region.station_cells.clone(),
                stations_after: optimization.open_cells.clone(),
                baseline: baseline.summary(),
                optimized: optimized.summary(),
                optimization,
            };
            Ok(Artifact::Optimize {
                output,
                baseline,
                optimized,
            })
        }
        ValidJob::Sweep {
            scenario,
            objective,
            delta_max,
            eps_rel,
            solver,
        } => {
            let baseline = region.score(scenario)?;
            let cfg = InstanceConfig {
                mode: Mode::Add,
                objective: *objective,
                ..InstanceConfig::default()
            };
            let inst = region.risk_instance(&baseline, &cfg)?;
            Ok(Artifact::Sweep(marginal_sweep(
                &inst, *delta_max, *eps_rel, solver,
            )?))
        }
        ValidJob::Scaling {
            scenario,
            n_list,
            curve,
            coarse_edge_m,
            solver,
        } => {
            let c = match curve {
                CurveKind::Distance => optimal_distance_curve(region, n_list, solver)?,
                CurveKind::Risk => optimal_ri_curve(region, scenario, n_list, solver)?,
            };
            let pooled = c.pooled_facilities(&region.layers);
            let (fit, fit_error) =
                match phase_averaged_beta(&region.layers, &pooled, *coarse_edge_m) {
                    Ok(f) => (Some(f), None),
                    Err(e) => (None, Some(e.to_string())),
                };
            Ok(Artifact::Scaling(ScalingOutput {
                curve: c,
                fit,
                fit_error,
            }))
        }
    }
}
