//! Hazard layer fusion on a hexagonal grid, street-network travel fields,
//! risk scoring and fire-station siting optimization.

pub mod decimal;
pub mod error;
pub mod hexgrid;
pub mod ingest;
pub mod optimizer;
pub mod region;
pub mod riskmodel;
pub mod scaling;
pub mod streetnet;

pub use error::{Error, Result};
