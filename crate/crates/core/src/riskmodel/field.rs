use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::scenario::{Scenario, STTFS};
use super::transform::{feature_combine, scale_layer, Resolved};
use crate::error::{Error, Result};
use crate::hexgrid::{CellId, LayerGrid};
use crate::streetnet::SttfsLayer;

/// Scaled fire-behavior and sociodemographic features per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Features {
    pub fb: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Scales ROS, FI, POP and MHV with the scenario transforms and combines
/// them into FB and SD.
pub fn features(layers: &LayerGrid, scenario: &Scenario) -> Result<Features> {
    scenario.validate()?;
    let scaled = |name: &str| -> Result<Vec<f64>> {
        scale_layer(layers.require(name)?, &scenario.transform(name))
    };
    let (ros, fi, pop, mhv) = (
        scaled("ROS")?,
        scaled("FI")?,
        scaled("POP")?,
        scaled("MHV")?,
    );
    let w = &scenario.feature_weights;
    Ok(Features {
        fb: feature_combine(&[&ros, &fi], &[w.fb.ros, w.fb.fi])?,
        sd: feature_combine(&[&pop, &mhv], &[w.sd.pop, w.sd.mhv])?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskField {
    pub cells: Vec<CellId>,
    pub base: Vec<f64>,
    /// Scaled travel time; `None` for cells without a finite response time.
    pub s: Vec<Option<f64>>,
    pub ri: Vec<Option<f64>>,
    /// The travel transform with its cap fixed, reused for `s(t)` of
    /// hypothetical station placements.
    pub travel: Resolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    pub mean_ri: f64,
    pub max_ri: f64,
    pub mean_base: f64,
    pub reachable: usize,
    pub unreachable: usize,
}

/// `base = wFB·FB + wSD·SD`, `RI = base · s(STTFS)`.
pub fn risk_field(
    cells: &[CellId],
    features: &Features,
    sttfs: &SttfsLayer,
    scenario: &Scenario,
) -> Result<RiskField> {
    scenario.validate()?;
    let n = cells.len();
    if features.fb.len() != n || features.sd.len() != n || sttfs.seconds.len() != n {
        return Err(Error::Alignment(
            "risk inputs cover different cell sets".into(),
        ));
    }
    let ow = &scenario.outcome_weights;
    let base = feature_combine(&[&features.fb, &features.sd], &[ow.fb, ow.sd])?;
    let finite: Vec<f64> = sttfs
        .seconds
        .iter()
        .copied()
        .filter(|t| t.is_finite())
        .collect();
    let travel = scenario.transform(STTFS).resolve(&finite)?;
    let mut s = Vec::with_capacity(n);
    let mut ri = Vec::with_capacity(n);
    for i in 0..n {
        if sttfs.is_reachable(i) {
            let si = travel.apply(sttfs.seconds[i]);
            s.push(Some(si));
            ri.push(Some(base[i] * si));
        } else {
            s.push(None);
            ri.push(None);
        }
    }
    Ok(RiskField {
        cells: cells.to_vec(),
        base,
        s,
        ri,
        travel,
    })
}

/// Convenience wrapper: features from `layers`, then [`risk_field`].
pub fn score_region(
    layers: &LayerGrid,
    sttfs: &SttfsLayer,
    scenario: &Scenario,
) -> Result<RiskField> {
    let f = features(layers, scenario)?;
    risk_field(layers.cells(), &f, sttfs, scenario)
}

impl RiskField {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn is_reachable(&self, i: usize) -> bool {
        self.ri[i].is_some()
    }

    /// Mean and max over reachable cells only.
    pub fn summary(&self) -> RiskSummary {
        let mut sum = 0.0;
        let mut sum_base = 0.0;
        let mut max: f64 = 0.0;
        let mut reachable = 0;
        for (i, r) in self.ri.iter().enumerate() {
            if let Some(r) = r {
                sum += r;
                sum_base += self.base[i];
                max = max.max(*r);
                reachable += 1;
            }
        }
        let denom = reachable.max(1) as f64;
        RiskSummary {
            mean_ri: sum / denom,
            max_ri: max,
            mean_base: sum_base / denom,
            reachable,
            unreachable: self.len() - reachable,
        }
    }

    /// `q,r,base,s,ri,reachable`; unscored fields are left empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,r,base,s,ri,reachable\n");
        for i in 0..self.len() {
            let c = self.cells[i];
            let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                c.q,
                c.r,
                self.base[i],
                opt(self.s[i]),
                opt(self.ri[i]),
                u8::from(self.is_reachable(i))
            );
        }
        out
    }
}
