use serde::{Deserialize, Serialize};

use super::field::{RiskField, RiskSummary};
use crate::error::{Error, Result};

pub const BRACKETS: usize = 21;

/// Bracket labels: `<-100`, then 10-point brackets up to `[90,100]`.
pub fn bracket_labels() -> Vec<String> {
    let mut out = vec!["<-100".to_string()];
    for k in 0..20 {
        let lo = -100 + 10 * k;
        let hi = lo + 10;
        if hi == 100 {
            out.push(format!("[{lo},{hi}]"));
        } else {
            out.push(format!("[{lo},{hi})"));
        }
    }
    out
}

/// Bracket index of a percent change (positive = improvement).
pub fn bracket_of(pct: f64) -> usize {
    if pct < -100.0 {
        0
    } else {
        (((pct + 100.0) / 10.0).floor() as usize + 1).min(BRACKETS - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    /// `100·(current − optimized)/current` for cells scored in both fields.
    #[serde(with = "crate::decimal::opt_vec")]
    pub percent_change: Vec<Option<f64>>,
    pub improved: usize,
    pub degraded: usize,
    pub unchanged: usize,
    pub histogram: Vec<usize>,
    pub labels: Vec<String>,
    pub only_current_reachable: usize,
    pub only_optimized_reachable: usize,
    pub unreachable_both: usize,
    pub current: RiskSummary,
    pub optimized: RiskSummary,
}

pub fn compare_fields(current: &RiskField, optimized: &RiskField) -> Result<CompareReport> {
    if current.cells != optimized.cells {
        return Err(Error::Alignment(
            "compared fields cover different cells".into(),
        ));
    }
    let mut rep = CompareReport {
        percent_change: Vec::with_capacity(current.len()),
        improved: 0,
        degraded: 0,
        unchanged: 0,
        histogram: vec![0; BRACKETS],
        labels: bracket_labels(),
        only_current_reachable: 0,
        only_optimized_reachable: 0,
        unreachable_both: 0,
        current: current.summary(),
        optimized: optimized.summary(),
    };
    for (c, o) in current.ri.iter().zip(&optimized.ri) {
        let (c, o) = match (c, o) {
            (Some(c), Some(o)) => (*c, *o),
            (Some(_), None) => {
                rep.only_current_reachable += 1;
                rep.percent_change.push(None);
                continue;
            }
            (None, Some(_)) => {
                rep.only_optimized_reachable += 1;
                rep.percent_change.push(None);
                continue;
            }
            (None, None) => {
                rep.unreachable_both += 1;
                rep.percent_change.push(None);
                continue;
            }
        };
        match o.partial_cmp(&c) {
            Some(std::cmp::Ordering::Less) => rep.improved += 1,
            Some(std::cmp::Ordering::Greater) => rep.degraded += 1,
            _ => rep.unchanged += 1,
        }
        let pct = if c > 0.0 {
            100.0 * (c - o) / c
        } else if o == c {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        rep.histogram[bracket_of(pct)] += 1;
        rep.percent_change.push(Some(pct));
    }
    Ok(rep)
}
