use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::read_file;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: i64,
    pub lat: f64,
    pub lon: f64,
}

/// A directed street segment. `length_m` and `class` are kept when the
/// source file provides them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub from: i64,
    pub to: i64,
    pub travel_seconds: f64,
    #[serde(default)]
    pub length_m: Option<f64>,
    #[serde(default)]
    pub class: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetworkFragment {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

/// Legal-speed fallback by road class, in km/h.
pub fn default_speed_kmh(class: &str) -> Option<f64> {
    match class.trim().to_ascii_lowercase().as_str() {
        "motorway" => Some(100.0),
        "primary" => Some(60.0),
        "residential" => Some(30.0),
        "service" => Some(15.0),
        _ => None,
    }
}

pub fn read_network(nodes_file: &Path, edges_file: &Path) -> Result<NetworkFragment> {
    let nodes_text = read_file(nodes_file)?;
    let edges_text = read_file(edges_file)?;
    parse_network(
        &nodes_text,
        &edges_file_label(nodes_file),
        &edges_text,
        &edges_file_label(edges_file),
    )
}

fn edges_file_label(path: &Path) -> String {
    path.display().to_string()
}

/// Parses node and edge CSV text. The labels only appear in error messages.
pub fn parse_network(
    nodes_csv: &str,
    nodes_label: &str,
    edges_csv: &str,
    edges_label: &str,
) -> Result<NetworkFragment> {
    let nodes = parse_nodes(nodes_csv, nodes_label)?;
    let ids: HashSet<i64> = nodes.iter().map(|n| n.id).collect();
    if ids.len() != nodes.len() {
        return Err(Error::Reference(format!(
            "{nodes_label}: duplicate node ids"
        )));
    }
    let edges = parse_edges(edges_csv, edges_label)?;
    for edge in &edges {
        for end in [edge.from, edge.to] {
            if !ids.contains(&end) {
                return Err(Error::Reference(format!(
                    "{edges_label}: edge {}->{} references node {end} absent from the nodes file",
                    edge.from, edge.to
                )));
            }
        }
    }
    Ok(NetworkFragment { nodes, edges })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

fn field<'a>(record: &'a csv::StringRecord, idx: Option<usize>) -> Option<&'a str> {
    idx.and_then(|i| record.get(i)).filter(|s| !s.is_empty())
}

fn parse_num<T: std::str::FromStr>(
    label: &str,
    line: usize,
    name: &str,
    value: Option<&str>,
) -> Result<T> {
    let value = value.ok_or_else(|| Error::parse(label, line, format!("missing `{name}`")))?;
    value
        .parse()
        .map_err(|_| Error::parse(label, line, format!("bad `{name}` value `{value}`")))
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn parse_nodes(text: &str, label: &str) -> Result<Vec<NodeRecord>> {
    let mut rdr = reader(text);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(label, 1, e.to_string()))?
        .clone();
    let (id_col, lat_col, lon_col) = (
        column(&headers, "node_id"),
        column(&headers, "lat"),
        column(&headers, "lon"),
    );
    if id_col.is_none() || lat_col.is_none() || lon_col.is_none() {
        return Err(Error::parse(label, 1, "expected header node_id,lat,lon"));
    }
    let mut nodes = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(label, line, e.to_string())
        })?;
        let line = record_line(&record);
        let node = NodeRecord {
            id: parse_num(label, line, "node_id", field(&record, id_col))?,
            lat: parse_num(label, line, "lat", field(&record, lat_col))?,
            lon: parse_num(label, line, "lon", field(&record, lon_col))?,
        };
        if !(-90.0..=90.0).contains(&node.lat) || !(-180.0..=180.0).contains(&node.lon) {
            return Err(Error::parse(label, line, "coordinates out of range"));
        }
        nodes.push(node);
    }
    Ok(nodes)
}

fn parse_edges(text: &str, label: &str) -> Result<Vec<EdgeRecord>> {
    let mut rdr = reader(text);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(label, 1, e.to_string()))?
        .clone();
    let from_col = column(&headers, "from");
    let to_col = column(&headers, "to");
    let secs_col = column(&headers, "travel_seconds");
    let len_col = column(&headers, "length_m");
    let class_col = column(&headers, "class");
    let oneway_col = column(&headers, "oneway");
    if from_col.is_none() || to_col.is_none() || secs_col.is_none() {
        return Err(Error::parse(
            label,
            1,
            "expected header from,to,travel_seconds[,length_m,class,oneway]",
        ));
    }

    let mut edges = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::parse(label, line, e.to_string())
        })?;
        let line = record_line(&record);
        let from: i64 = parse_num(label, line, "from", field(&record, from_col))?;
        let to: i64 = parse_num(label, line, "to", field(&record, to_col))?;
        let length_m: Option<f64> = match field(&record, len_col) {
            Some(v) => Some(parse_num(label, line, "length_m", Some(v))?),
            None => None,
        };
        let class = field(&record, class_col).map(str::to_string);
        let travel_seconds = match field(&record, secs_col) {
            Some(v) => parse_num(label, line, "travel_seconds", Some(v))?,
            None => {
                let length = length_m.ok_or_else(|| {
                    Error::parse(
                        label,
                        line,
                        "travel_seconds absent and no length_m to derive it",
                    )
                })?;
                let class_name = class.as_deref().ok_or_else(|| {
                    Error::parse(label, line, "travel_seconds absent and no road class")
                })?;
                let kmh = default_speed_kmh(class_name).ok_or_else(|| {
                    Error::parse(
                        label,
                        line,
                        format!("no default speed for class `{class_name}`"),
                    )
                })?;
                length / (kmh * 1000.0 / 3600.0)
            }
        };
        if !(travel_seconds >= 0.0) || !travel_seconds.is_finite() {
            return Err(Error::parse(
                label,
                line,
                "travel_seconds must be finite and >= 0",
            ));
        }
        if let Some(len) = length_m {
            if !(len >= 0.0) {
                return Err(Error::parse(label, line, "length_m must be >= 0"));
            }
        }
        let oneway = match field(&record, oneway_col) {
            None | Some("1") => true,
            Some("0") => false,
            Some(other) => {
                return Err(Error::parse(
                    label,
                    line,
                    format!("oneway must be 0 or 1, got `{other}`"),
                ))
            }
        };
        let edge = EdgeRecord {
            from,
            to,
            travel_seconds,
            length_m,
            class,
        };
        let reverse = (!oneway).then(|| EdgeRecord {
            from: to,
            to: from,
            ..edge.clone()
        });
        edges.push(edge);
        edges.extend(reverse);
    }
    Ok(edges)
}

pub fn write_nodes_csv(nodes: &[NodeRecord]) -> String {
    let mut out = String::from("node_id,lat,lon\n");
    for n in nodes {
        let _ = writeln!(out, "{},{},{}", n.id, n.lat, n.lon);
    }
    out
}

/// Every record is written as a directed (`oneway=1`) row.
pub fn write_edges_csv(edges: &[EdgeRecord]) -> String {
    let mut out = String::from("from,to,travel_seconds,length_m,class,oneway\n");
    for e in edges {
        let len = e.length_m.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},1",
            e.from,
            e.to,
            e.travel_seconds,
            len,
            e.class.as_deref().unwrap_or("")
        );
    }
    out
}
