use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::read_file;
use crate::error::{Error, Result};

/// One polygon: closed exterior ring plus optional closed holes, as
/// `[lon, lat]` positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<[f64; 2]>,
    #[serde(default)]
    pub holes: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonFeature {
    pub id: Option<String>,
    pub parts: Vec<Polygon>,
    #[serde(default)]
    pub properties: BTreeMap<String, Value>,
}

impl PolygonFeature {
    pub fn number(&self, key: &str) -> Option<f64> {
        self.properties.get(key).and_then(Value::as_f64)
    }
}

pub fn read_geojson_polygons(path: &Path) -> Result<Vec<PolygonFeature>> {
    parse_geojson_polygons(&read_file(path)?)
}

pub fn parse_geojson_polygons(text: &str) -> Result<Vec<PolygonFeature>> {
    let root: Value = serde_json::from_str(text)?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::Geometry("expected a FeatureCollection".into()));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Geometry("FeatureCollection without `features`".into()))?;

    let mut out = Vec::with_capacity(features.len());
    for (idx, feature) in features.iter().enumerate() {
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::Geometry(format!("feature {idx}: missing geometry")))?;
        let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| Error::Geometry(format!("feature {idx}: missing coordinates")))?;
        let parts = match kind {
            "Polygon" => vec![parse_polygon(coords, idx)?],
            "MultiPolygon" => coords
                .as_array()
                .ok_or_else(|| Error::Geometry(format!("feature {idx}: bad MultiPolygon")))?
                .iter()
                .map(|p| parse_polygon(p, idx))
                .collect::<Result<Vec<_>>>()?,
            other => {
                return Err(Error::Geometry(format!(
                    "feature {idx}: unsupported geometry type `{other}`"
                )))
            }
        };
        let id = match feature.get("id") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        let properties = match feature.get("properties") {
            Some(Value::Object(map)) => map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            _ => BTreeMap::new(),
        };
        out.push(PolygonFeature {
            id,
            parts,
            properties,
        });
    }
    Ok(out)
}

fn parse_polygon(value: &Value, feature: usize) -> Result<Polygon> {
    let rings = value
        .as_array()
        .ok_or_else(|| Error::Geometry(format!("feature {feature}: polygon is not an array")))?;
    let mut parsed = rings
        .iter()
        .map(|r| parse_ring(r, feature))
        .collect::<Result<Vec<_>>>()?;
    if parsed.is_empty() {
        return Err(Error::Geometry(format!(
            "feature {feature}: polygon has no rings"
        )));
    }
    let exterior = parsed.remove(0);
    Ok(Polygon {
        exterior,
        holes: parsed,
    })
}

fn parse_ring(value: &Value, feature: usize) -> Result<Vec<[f64; 2]>> {
    let positions = value
        .as_array()
        .ok_or_else(|| Error::Geometry(format!("feature {feature}: ring is not an array")))?;
    let mut ring = Vec::with_capacity(positions.len());
    for pos in positions {
        let xy = pos.as_array().filter(|a| a.len() >= 2).ok_or_else(|| {
            Error::Geometry(format!("feature {feature}: position needs [lon, lat]"))
        })?;
        let lon = xy[0].as_f64();
        let lat = xy[1].as_f64();
        match (lon, lat) {
            (Some(lon), Some(lat)) => ring.push([lon, lat]),
            _ => {
                return Err(Error::Geometry(format!(
                    "feature {feature}: non-numeric position"
                )))
            }
        }
    }
    if ring.len() < 4 {
        return Err(Error::Geometry(format!(
            "feature {feature}: ring needs at least 4 positions, found {}",
            ring.len()
        )));
    }
    if ring.first() != ring.last() {
        return Err(Error::Geometry(format!(
            "feature {feature}: ring is not closed (first and last positions differ)"
        )));
    }
    Ok(ring)
}

pub fn write_geojson_polygons(features: &[PolygonFeature]) -> String {
    let rings = |p: &Polygon| {
        let mut all = vec![p.exterior.clone()];
        all.extend(p.holes.iter().cloned());
        all
    };
    let features: Vec<Value> = features
        .iter()
        .map(|f| {
            let geometry = if f.parts.len() == 1 {
                json!({ "type": "Polygon", "coordinates": rings(&f.parts[0]) })
            } else {
                let parts: Vec<_> = f.parts.iter().map(rings).collect();
                json!({ "type": "MultiPolygon", "coordinates": parts })
            };
            let mut feature = json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": f.properties,
            });
            if let Some(id) = &f.id {
                feature["id"] = json!(id);
            }
            feature
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))
        .expect("geojson serializes")
}
