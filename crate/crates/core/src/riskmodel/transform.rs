use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound used by the capped transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cap {
    Fixed(f64),
    /// Empirical quantile of the finite layer values, `p` in [0, 1].
    Quantile(f64),
    RegionMax,
}

/// Increasing map of a raw layer into [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    /// `v / max(v)` over the region.
    Linear,
    /// `min(v, cap) / cap`.
    LinearCapped { cap: Cap },
    /// `ln(1 + min(v, cap)) / ln(1 + cap)`.
    Log1p { cap: Cap },
    /// `(exp(rate·min(v,cap)/cap) − 1) / (exp(rate) − 1)`.
    Exponential { rate: f64, cap: Cap },
    /// Linear interpolation through `(x, y)` knots, flat outside them.
    Piecewise { points: Vec<(f64, f64)> },
}

impl TransformSpec {
    pub fn capped(cap: f64) -> Self {
        TransformSpec::LinearCapped {
            cap: Cap::Fixed(cap),
        }
    }

    pub fn quantile(p: f64) -> Self {
        TransformSpec::LinearCapped {
            cap: Cap::Quantile(p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_cap = |cap: &Cap| match *cap {
            Cap::Fixed(c) if !(c > 0.0) || !c.is_finite() => Err(Error::Spec(format!(
                "cap must be positive and finite, got {c}"
            ))),
            Cap::Quantile(p) if !(0.0..=1.0).contains(&p) => {
                Err(Error::Spec(format!("quantile must lie in [0, 1], got {p}")))
            }
            _ => Ok(()),
        };
        match self {
            TransformSpec::Linear => Ok(()),
            TransformSpec::LinearCapped { cap } | TransformSpec::Log1p { cap } => check_cap(cap),
            TransformSpec::Exponential { rate, cap } => {
                if *rate == 0.0 || !rate.is_finite() {
                    return Err(Error::Spec(format!(
                        "exponential rate must be nonzero, got {rate}"
                    )));
                }
                check_cap(cap)
            }
            TransformSpec::Piecewise { points } => {
                if points.len() < 2 {
                    return Err(Error::Spec(
                        "piecewise transform needs at least two knots".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[0].0 < w[1].0) {
                        return Err(Error::Spec("piecewise knots must have increasing x".into()));
                    }
                    if w[1].1 < w[0].1 {
                        return Err(Error::Spec(
                            "piecewise transform must be nondecreasing".into(),
                        ));
                    }
                }
                if points
                    .iter()
                    .any(|p| !(0.0..=1.0).contains(&p.1) || !p.0.is_finite())
                {
                    return Err(Error::Spec("piecewise knots must map into [0, 1]".into()));
                }
                Ok(())
            }
        }
    }

    /// Fixes any data-dependent cap against `values` and returns the
    /// pointwise function.
    pub fn resolve(&self, values: &[f64]) -> Result<Resolved> {
        self.validate()?;
        let cap_of = |cap: &Cap| -> Option<f64> {
            let c = match *cap {
                Cap::Fixed(c) => return Some(c),
                Cap::Quantile(p) => quantile(values, p)?,
                Cap::RegionMax => finite_max(values)?,
            };
            // data-derived caps degrade to zero on constant or nonpositive layers
            (c > 0.0 && !is_constant(values)).then_some(c)
        };
        Ok(match self {
            TransformSpec::Linear => match cap_of(&Cap::RegionMax) {
                Some(cap) => Resolved::Linear { cap },
                None => Resolved::Zero,
            },
            TransformSpec::LinearCapped { cap } => match cap_of(cap) {
                Some(cap) => Resolved::Linear { cap },
                None => Resolved::Zero,
            },
            TransformSpec::Log1p { cap } => match cap_of(cap) {
                Some(cap) => Resolved::Log1p { cap },
                None => Resolved::Zero,
            },
            TransformSpec::Exponential { rate, cap } => match cap_of(cap) {
                Some(cap) => Resolved::Exponential { rate: *rate, cap },
                None => Resolved::Zero,
            },
            TransformSpec::Piecewise { points } => Resolved::Piecewise {
                points: points.clone(),
            },
        })
    }
}

/// A transform with its parameters fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolved {
    Zero,
    Linear { cap: f64 },
    Log1p { cap: f64 },
    Exponential { rate: f64, cap: f64 },
    Piecewise { points: Vec<(f64, f64)> },
}

impl Resolved {
    pub fn apply(&self, v: f64) -> f64 {
        let v = if v.is_nan() { 0.0 } else { v.max(0.0) };
        match self {
            Resolved::Zero => 0.0,
            Resolved::Linear { cap } => v.min(*cap) / cap,
            Resolved::Log1p { cap } => v.min(*cap).ln_1p() / cap.ln_1p(),
            Resolved::Exponential { rate, cap } => {
                (rate * v.min(*cap) / cap).exp_m1() / rate.exp_m1()
            }
            Resolved::Piecewise { points } => {
                let first = points[0];
                let last = points[points.len() - 1];
                if v <= first.0 {
                    return first.1;
                }
                if v >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|p| p.0 <= v);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (y1 - y0) * (v - x0) / (x1 - x0)
            }
        }
        .clamp(0.0, 1.0)
    }
}

fn finite_max(values: &[f64]) -> Option<f64> {
    values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

fn is_constant(values: &[f64]) -> bool {
    let mut it = values.iter().filter(|v| v.is_finite());
    match it.next() {
        Some(first) => it.all(|v| v == first),
        None => true,
    }
}

/// Linear-interpolated empirical quantile of the finite values.
pub fn quantile(values: &[f64], p: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let h = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (h - lo as f64))
}

/// Scales a layer into [0, 1]. Infinite entries map to 1.
pub fn scale_layer(values: &[f64], spec: &TransformSpec) -> Result<Vec<f64>> {
    let f = spec.resolve(values)?;
    Ok(values
        .iter()
        .map(|&v| if v == f64::INFINITY { 1.0 } else { f.apply(v) })
        .collect())
}

/// Per-cell convex combination of equally long layers.
pub fn feature_combine(layers: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
    if layers.len() != weights.len() || layers.is_empty() {
        return Err(Error::Spec("one weight per layer is required".into()));
    }
    check_convex(weights)?;
    let n = layers[0].len();
    if layers.iter().any(|l| l.len() != n) {
        return Err(Error::Alignment("feature layers differ in length".into()));
    }
    Ok((0..n)
        .map(|i| layers.iter().zip(weights).map(|(l, w)| w * l[i]).sum())
        .collect())
}

pub(crate) fn check_convex(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::Spec(format!(
            "weights must be nonnegative: {weights:?}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Spec(format!("weights must sum to 1, got {sum}")));
    }
    Ok(())
}
