use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::read_file;
use crate::error::{Error, Result};

/// ESRI ASCII raster. Georeferencing is in degrees: `x` is longitude and
/// `y` latitude; row 0 is the northernmost row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsciiGrid {
    pub ncols: usize,
    pub nrows: usize,
    pub xllcorner: f64,
    pub yllcorner: f64,
    pub cellsize: f64,
    pub nodata: f64,
    pub values: Vec<f64>,
}

impl AsciiGrid {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.ncols == 0 || self.nrows == 0 {
            return Err("ncols and nrows must be positive".into());
        }
        if !(self.cellsize > 0.0) {
            return Err(format!("cellsize must be positive, got {}", self.cellsize));
        }
        if self.values.len() != self.ncols * self.nrows {
            return Err(format!(
                "expected {} values, found {}",
                self.ncols * self.nrows,
                self.values.len()
            ));
        }
        Ok(())
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        let v = self.values[idx];
        v.is_finite() && v != self.nodata
    }

    pub fn valid_count(&self) -> usize {
        (0..self.values.len()).filter(|&i| self.is_valid(i)).count()
    }

    /// Center of cell (`row`, `col`) as (lat, lon).
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        let lon = self.xllcorner + (col as f64 + 0.5) * self.cellsize;
        let lat = self.yllcorner + ((self.nrows - 1 - row) as f64 + 0.5) * self.cellsize;
        (lat, lon)
    }

    /// Iterates `(lat, lon, value)` over valid cells in row-major order.
    pub fn valid_cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len())
            .filter(|&i| self.is_valid(i))
            .map(move |i| {
                let (lat, lon) = self.cell_center(i / self.ncols, i % self.ncols);
                (lat, lon, self.values[i])
            })
    }
}

pub fn read_ascii_grid(path: &Path) -> Result<AsciiGrid> {
    parse_ascii_grid(&read_file(path)?, &path.display().to_string())
}

pub fn parse_ascii_grid(text: &str, label: &str) -> Result<AsciiGrid> {
    let mut ncols = None;
    let mut nrows = None;
    let mut xll = None;
    let mut yll = None;
    let mut cellsize = None;
    let mut nodata = None;

    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, line)) = lines.peek().copied() {
        let mut parts = line.split_whitespace();
        let Some(key) = parts.next() else {
            lines.next();
            continue;
        };
        let key = key.to_ascii_lowercase();
        if key.parse::<f64>().is_ok() {
            break;
        }
        let value = parts
            .next()
            .ok_or_else(|| Error::parse(label, idx + 1, format!("header `{key}` has no value")))?;
        let num: f64 = value
            .parse()
            .map_err(|_| Error::parse(label, idx + 1, format!("bad header value `{value}`")))?;
        match key.as_str() {
            "ncols" => ncols = Some(num),
            "nrows" => nrows = Some(num),
            "xllcorner" => xll = Some(num),
            "yllcorner" => yll = Some(num),
            "cellsize" => cellsize = Some(num),
            "nodata_value" | "nodata" => nodata = Some(num),
            _ => {
                return Err(Error::parse(
                    label,
                    idx + 1,
                    format!("unknown header key `{key}`"),
                ))
            }
        }
        lines.next();
    }

    let need = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| Error::parse(label, 1, format!("missing header key `{name}`")))
    };
    let ncols_f = need(ncols, "ncols")?;
    let nrows_f = need(nrows, "nrows")?;
    if ncols_f < 1.0 || nrows_f < 1.0 || ncols_f.fract() != 0.0 || nrows_f.fract() != 0.0 {
        return Err(Error::parse(
            label,
            1,
            "ncols and nrows must be positive integers",
        ));
    }

    let mut values = Vec::new();
    let mut last_line = 0;
    for (idx, line) in lines {
        last_line = idx + 1;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(label, idx + 1, format!("bad value `{tok}`")))?;
            values.push(v);
        }
    }

    let grid = AsciiGrid {
        ncols: ncols_f as usize,
        nrows: nrows_f as usize,
        xllcorner: need(xll, "xllcorner")?,
        yllcorner: need(yll, "yllcorner")?,
        cellsize: need(cellsize, "cellsize")?,
        nodata: need(nodata, "nodata_value")?,
        values,
    };
    grid.validate()
        .map_err(|msg| Error::parse(label, last_line, msg))?;
    Ok(grid)
}

pub fn write_ascii_grid(grid: &AsciiGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.ncols);
    let _ = writeln!(out, "nrows {}", grid.nrows);
    let _ = writeln!(out, "xllcorner {}", grid.xllcorner);
    let _ = writeln!(out, "yllcorner {}", grid.yllcorner);
    let _ = writeln!(out, "cellsize {}", grid.cellsize);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata);
    for row in grid.values.chunks(grid.ncols) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}
