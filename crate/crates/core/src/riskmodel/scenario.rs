use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::transform::{check_convex, TransformSpec};
use crate::error::{Error, Result};

/// Layer name of the travel-time field inside a scenario's transform map.
pub const STTFS: &str = "STTFS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FbWeights {
    #[serde(rename = "ROS")]
    pub ros: f64,
    #[serde(rename = "FI")]
    pub fi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdWeights {
    #[serde(rename = "POP")]
    pub pop: f64,
    #[serde(rename = "MHV")]
    pub mhv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    #[serde(rename = "FB")]
    pub fb: FbWeights,
    #[serde(rename = "SD")]
    pub sd: SdWeights,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights {
            fb: FbWeights { ros: 0.5, fi: 0.5 },
            sd: SdWeights { pop: 0.5, mhv: 0.5 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeWeights {
    #[serde(rename = "FB")]
    pub fb: f64,
    #[serde(rename = "SD")]
    pub sd: f64,
}

impl Default for OutcomeWeights {
    fn default() -> Self {
        OutcomeWeights { fb: 0.5, sd: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Overrides of [`default_transforms`]; absent layers use the default.
    #[serde(default)]
    pub transforms: BTreeMap<String, TransformSpec>,
    #[serde(default)]
    pub feature_weights: FeatureWeights,
    #[serde(default)]
    pub outcome_weights: OutcomeWeights,
}

/// ROS and FI capped at 9 and 4.1, POP and MHV at their 99th percentile,
/// travel time at 30 minutes.
pub fn default_transforms() -> BTreeMap<String, TransformSpec> {
    BTreeMap::from([
        ("ROS".to_string(), TransformSpec::capped(9.0)),
        ("FI".to_string(), TransformSpec::capped(4.1)),
        ("POP".to_string(), TransformSpec::quantile(0.99)),
        ("MHV".to_string(), TransformSpec::quantile(0.99)),
        (STTFS.to_string(), TransformSpec::capped(1800.0)),
    ])
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::preset("RI").expect("RI preset")
    }
}

impl Scenario {
    /// `RI` (even split), `RIF` (0.75 on fire behavior) or `RIS` (0.75 on
    /// sociodemographics).
    pub fn preset(name: &str) -> Result<Self> {
        let (fb, sd) = match name.to_ascii_uppercase().as_str() {
            "RI" => (0.5, 0.5),
            "RIF" => (0.75, 0.25),
            "RIS" => (0.25, 0.75),
            other => return Err(Error::Spec(format!("unknown scenario preset {other:?}"))),
        };
        Ok(Scenario {
            name: name.to_ascii_uppercase(),
            transforms: BTreeMap::new(),
            feature_weights: FeatureWeights::default(),
            outcome_weights: OutcomeWeights { fb, sd },
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::Spec(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let fw = &self.feature_weights;
        check_convex(&[fw.fb.ros, fw.fb.fi])?;
        check_convex(&[fw.sd.pop, fw.sd.mhv])?;
        check_convex(&[self.outcome_weights.fb, self.outcome_weights.sd])?;
        for spec in self.transforms.values() {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn transform(&self, layer: &str) -> TransformSpec {
        self.transforms
            .get(layer)
            .cloned()
            .or_else(|| default_transforms().remove(layer))
            .unwrap_or(TransformSpec::Linear)
    }
}
