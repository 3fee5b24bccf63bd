//! Serde adapter writing `f64` as a decimal string that parses back to the
//! same bits.

use serde::{de, Deserialize, Deserializer, Serializer};

pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_string(*v))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Number(f64),
    }
    match Repr::deserialize(d)? {
        Repr::Number(v) => Ok(v),
        Repr::Text(t) => parse(&t).ok_or_else(|| de::Error::custom(format!("bad decimal {t:?}"))),
    }
}

pub fn to_string(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

pub fn parse(text: &str) -> Option<f64> {
    text.trim().parse().ok()
}

/// `Vec<Option<f64>>` as a list of decimal strings and nulls.
pub mod opt_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Option<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&x.map(super::to_string))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<f64>>, D::Error> {
        #[derive(Deserialize)]
        struct W(#[serde(with = "super")] f64);
        let raw: Vec<Option<W>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|w| w.map(|w| w.0)).collect())
    }
}
