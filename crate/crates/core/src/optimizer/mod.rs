//! Station siting: relocate `S` stations or add `δ` to a fixed set, under a
//! mean, max or blended objective.
//!
//! Serving demand cell `j` from a station at `i` costs
//! `base_j · s(t(i,j))`. For a fixed open set every cell goes to its cheapest
//! open station (ties to the smaller candidate index). Small instances are
//! solved exactly by branch-and-bound; larger ones by multi-start swap
//! search with a reported bound gap.

mod assign;
mod bnb;
mod instance;
mod local;
mod oracle;
mod solve;

pub use instance::{
    build_distance_instance, build_instance, Evaluation, Instance, InstanceConfig, Mode, Objective,
    NO_TRAVEL,
};
pub(crate) use local::greedy_from;
pub use oracle::{brute_force_oracle, ORACLE_BUDGET};
pub use solve::{
    add_stations, marginal_sweep, solve, solve_chain, solve_warm, MarginalCurve, MarginalPoint,
    OptimizationResult, SolverConfig, SolverKind, Status,
};
