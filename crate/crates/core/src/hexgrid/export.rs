use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use super::LayerGrid;

/// `q,r,<layer>...` with layers in name order.
pub fn layers_csv(layers: &LayerGrid) -> String {
    let names: Vec<&str> = layers.names().collect();
    let mut out = String::from("q,r");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    let cols: Vec<&[f64]> = names.iter().map(|n| layers.get(n).unwrap()).collect();
    for (i, cell) in layers.cells().iter().enumerate() {
        let _ = write!(out, "{},{}", cell.q, cell.r);
        for col in &cols {
            let _ = write!(out, ",{}", col[i]);
        }
        out.push('\n');
    }
    out
}

/// Hexagon polygons as a GeoJSON FeatureCollection with `q`, `r` and the
/// layer values as properties.
pub fn hexagons_geojson(layers: &LayerGrid) -> Value {
    let grid = &layers.grid;
    let features: Vec<Value> = grid
        .cells()
        .iter()
        .enumerate()
        .map(|(i, &cell)| {
            let mut ring: Vec<[f64; 2]> = grid
                .hexagon(cell)
                .iter()
                .map(|&(x, y)| {
                    let (lat, lon) = grid.unproject(x, y);
                    [lon, lat]
                })
                .collect();
            ring.push(ring[0]);
            let mut props = Map::new();
            props.insert("q".into(), json!(cell.q));
            props.insert("r".into(), json!(cell.r));
            for (name, values) in layers.layers() {
                props.insert(name.clone(), json!(values[i]));
            }
            json!({
                "type": "Feature",
                "id": format!("{},{}", cell.q, cell.r),
                "geometry": { "type": "Polygon", "coordinates": [ring] },
                "properties": props,
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hexgrid::{CellId, HexGrid};
    use crate::ingest::parse_geojson_polygons;

    #[test]
    fn csv_and_geojson_shapes() {
        let grid =
            HexGrid::new((10.0, 20.0), 300.0, [CellId::new(0, 0), CellId::new(0, 1)]).unwrap();
        let mut lg = LayerGrid::new(grid);
        lg.insert("POP", vec![1.0, 2.5]).unwrap();
        lg.insert("FI", vec![0.0, 4.1]).unwrap();
        assert_eq!(layers_csv(&lg), "q,r,FI,POP\n0,0,0,1\n0,1,4.1,2.5\n");

        let gj = hexagons_geojson(&lg).to_string();
        let polys = parse_geojson_polygons(&gj).unwrap();
        assert_eq!(polys.len(), 2);
        assert_eq!(polys[1].number("POP"), Some(2.5));
        assert_eq!(polys[0].parts[0].exterior.len(), 7);
    }
}
