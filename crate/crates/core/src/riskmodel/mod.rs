//! Scaling of raw layers into [0, 1], the fire-behavior (FB) and
//! sociodemographic (SD) features, and the compound risk index
//! `RI = (wFB·FB + wSD·SD) · s(STTFS)`.

mod compare;
mod field;
mod scenario;
mod transform;

pub use compare::{bracket_labels, bracket_of, compare_fields, CompareReport, BRACKETS};
pub use field::{features, risk_field, score_region, Features, RiskField, RiskSummary};
pub use scenario::{
    default_transforms, FbWeights, FeatureWeights, OutcomeWeights, Scenario, SdWeights, STTFS,
};
pub use transform::{feature_combine, quantile, scale_layer, Cap, Resolved, TransformSpec};
