use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::read_file;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub lat: f64,
    pub lon: f64,
    #[serde(default)]
    pub value: Option<f64>,
}

pub fn read_points_csv(path: &Path) -> Result<Vec<PointRecord>> {
    parse_points_csv(&read_file(path)?, &path.display().to_string())
}

/// Parses `lat,lon[,value]` rows. Duplicate coordinates are kept.
pub fn parse_points_csv(text: &str, label: &str) -> Result<Vec<PointRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(label, 1, e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(lat_col), Some(lon_col)) = (find("lat"), find("lon")) else {
        return Err(Error::parse(label, 1, "expected header lat,lon[,value]"));
    };
    let value_col = find("value");

    let mut points = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(label, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let num = |idx: usize, name: &str| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse()
                .map_err(|_| Error::parse(label, line, format!("bad `{name}` value `{raw}`")))
        };
        let lat = num(lat_col, "lat")?;
        let lon = num(lon_col, "lon")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Range(format!(
                "{label}: line {line}: lat {lat} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(Error::Range(format!(
                "{label}: line {line}: lon {lon} outside [-180, 180]"
            )));
        }
        let value = match value_col
            .and_then(|i| record.get(i))
            .filter(|s| !s.is_empty())
        {
            Some(_) => Some(num(value_col.unwrap(), "value")?),
            None => None,
        };
        points.push(PointRecord { lat, lon, value });
    }
    Ok(points)
}

pub fn write_points_csv(points: &[PointRecord]) -> String {
    let mut out = String::from("lat,lon,value\n");
    for p in points {
        let value = p.value.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{}", p.lat, p.lon, value);
    }
    out
}
