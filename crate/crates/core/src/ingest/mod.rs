//! Readers and writers for region inputs, plus a deterministic synthetic
//! region generator.
//!
//! A [`RegionBundle`] is the raw, untessellated view of a study area: the
//! street network, raster layers, point sets and polygon sets. On disk a
//! bundle is a directory:
//!
//! ```text
//! meta.json            {"name": "..."}
//! nodes.csv            node_id,lat,lon
//! edges.csv            from,to,travel_seconds,length_m,class,oneway
//! rasters/<NAME>.asc   ESRI ASCII grids
//! points/<name>.csv    lat,lon[,value]
//! polygons/<name>.geojson
//! ```

mod ascii;
mod geojson;
mod network;
mod points;
mod synth;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use ascii::{parse_ascii_grid, read_ascii_grid, write_ascii_grid, AsciiGrid};
pub use geojson::{
    parse_geojson_polygons, read_geojson_polygons, write_geojson_polygons, Polygon, PolygonFeature,
};
pub use network::{
    default_speed_kmh, parse_network, read_network, write_edges_csv, write_nodes_csv, EdgeRecord,
    NetworkFragment, NodeRecord,
};
pub use points::{parse_points_csv, read_points_csv, write_points_csv, PointRecord};
pub use synth::{synth_region, Blob, HazardPattern, SynthSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBundle {
    pub name: String,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default)]
    pub rasters: BTreeMap<String, AsciiGrid>,
    #[serde(default)]
    pub point_sets: BTreeMap<String, Vec<PointRecord>>,
    #[serde(default)]
    pub polygon_sets: BTreeMap<String, Vec<PolygonFeature>>,
}

impl RegionBundle {
    pub fn from_network(name: impl Into<String>, network: NetworkFragment) -> Self {
        RegionBundle {
            name: name.into(),
            nodes: network.nodes,
            edges: network.edges,
            rasters: BTreeMap::new(),
            point_sets: BTreeMap::new(),
            polygon_sets: BTreeMap::new(),
        }
    }

    /// Checks the structural invariants: unique node ids, edge endpoints
    /// present, nonnegative travel times and self-consistent rasters.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::with_capacity(self.nodes.len());
        for node in &self.nodes {
            if !ids.insert(node.id) {
                return Err(Error::Reference(format!("duplicate node id {}", node.id)));
            }
        }
        for edge in &self.edges {
            for end in [edge.from, edge.to] {
                if !ids.contains(&end) {
                    return Err(Error::Reference(format!(
                        "edge {}->{} references unknown node {end}",
                        edge.from, edge.to
                    )));
                }
            }
            if !(edge.travel_seconds >= 0.0) || !edge.travel_seconds.is_finite() {
                return Err(Error::Range(format!(
                    "edge {}->{} has travel_seconds {}",
                    edge.from, edge.to, edge.travel_seconds
                )));
            }
        }
        for (name, grid) in &self.rasters {
            grid.validate()
                .map_err(|e| Error::Argument(format!("raster {name}: {e}")))?;
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding of the bundle.
    pub fn checksum(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("bundle serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let name = match fs::read_to_string(dir.join("meta.json")) {
            Ok(text) => {
                let meta: serde_json::Value = serde_json::from_str(&text)?;
                meta.get("name")
                    .and_then(|v| v.as_str())
                    .unwrap_or_default()
                    .to_string()
            }
            Err(_) => dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        let network = read_network(&dir.join("nodes.csv"), &dir.join("edges.csv"))?;
        let mut bundle = RegionBundle::from_network(name, network);

        for (sub, ext) in [
            ("rasters", "asc"),
            ("points", "csv"),
            ("polygons", "geojson"),
        ] {
            for (stem, path) in list_files(&dir.join(sub), ext)? {
                match sub {
                    "rasters" => {
                        bundle.rasters.insert(stem, read_ascii_grid(&path)?);
                    }
                    "points" => {
                        bundle.point_sets.insert(stem, read_points_csv(&path)?);
                    }
                    _ => {
                        bundle
                            .polygon_sets
                            .insert(stem, read_geojson_polygons(&path)?);
                    }
                }
            }
        }
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = serde_json::json!({ "name": self.name });
        write_file(&dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
        write_file(&dir.join("nodes.csv"), write_nodes_csv(&self.nodes))?;
        write_file(&dir.join("edges.csv"), write_edges_csv(&self.edges))?;
        if !self.rasters.is_empty() {
            let sub = dir.join("rasters");
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            for (name, grid) in &self.rasters {
                write_file(&sub.join(format!("{name}.asc")), write_ascii_grid(grid))?;
            }
        }
        if !self.point_sets.is_empty() {
            let sub = dir.join("points");
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            for (name, points) in &self.point_sets {
                write_file(&sub.join(format!("{name}.csv")), write_points_csv(points))?;
            }
        }
        if !self.polygon_sets.is_empty() {
            let sub = dir.join("polygons");
            fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            for (name, polygons) in &self.polygon_sets {
                write_file(
                    &sub.join(format!("{name}.geojson")),
                    write_geojson_polygons(polygons),
                )?;
            }
        }
        Ok(())
    }
}

fn list_files(dir: &Path, ext: &str) -> Result<Vec<(String, std::path::PathBuf)>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, contents: String) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_directory_round_trip() {
        let bundle = synth_region(3, 4, 5, &SynthSpec::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        bundle.write_dir(dir.path()).unwrap();
        let back = RegionBundle::read_dir(dir.path()).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(back.checksum(), bundle.checksum());
    }

    #[test]
    fn validate_rejects_duplicate_nodes() {
        let mut bundle = synth_region(1, 2, 2, &SynthSpec::default()).unwrap();
        let dup = bundle.nodes[0].clone();
        bundle.nodes.push(dup);
        assert!(matches!(bundle.validate(), Err(Error::Reference(_))));
    }
}
