use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CellId, HexGrid};
use crate::error::{Error, Result};

/// Per-cell values aligned with [`HexGrid::cells`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub values: Vec<f64>,
    /// Quantity that fell on cells outside the grid's cell set.
    pub outside: f64,
    /// Cells that received no input at all.
    pub missing: usize,
}

impl Layer {
    pub fn zeros(len: usize) -> Self {
        Layer {
            values: vec![0.0; len],
            outside: 0.0,
            missing: len,
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Summary of the raw samples that landed in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub count: usize,
    pub sum: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub median: f64,
    /// Most frequent value; ties go to the smallest value.
    pub mode: f64,
    pub min: f64,
    pub max: f64,
}

impl CellStats {
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let count = sorted.len();
        let sum: f64 = sorted.iter().sum();
        let mean = sum / count as f64;
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        let median = if count % 2 == 1 {
            sorted[count / 2]
        } else {
            (sorted[count / 2 - 1] + sorted[count / 2]) / 2.0
        };
        let mut mode = sorted[0];
        let mut best_run = 0;
        let mut i = 0;
        while i < count {
            let mut j = i;
            while j < count && sorted[j] == sorted[i] {
                j += 1;
            }
            if j - i > best_run {
                best_run = j - i;
                mode = sorted[i];
            }
            i = j;
        }
        Some(CellStats {
            count,
            sum,
            mean,
            std: var.sqrt(),
            median,
            mode,
            min: sorted[0],
            max: sorted[count - 1],
        })
    }
}

/// Named per-cell fields over a shared cell set.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    pub grid: HexGrid,
    layers: BTreeMap<String, Vec<f64>>,
    stats: BTreeMap<String, Vec<Option<CellStats>>>,
}

impl LayerGrid {
    pub fn new(grid: HexGrid) -> Self {
        LayerGrid {
            grid,
            layers: BTreeMap::new(),
            stats: BTreeMap::new(),
        }
    }

    pub fn cells(&self) -> &[CellId] {
        self.grid.cells()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn insert(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if values.len() != self.grid.len() {
            return Err(Error::Alignment(format!(
                "layer {name} has {} values for {} cells",
                values.len(),
                self.grid.len()
            )));
        }
        if name == "POP" && values.iter().any(|v| *v < 0.0) {
            return Err(Error::Range("POP must be nonnegative".into()));
        }
        self.layers.insert(name, values);
        Ok(())
    }

    pub fn insert_stats(
        &mut self,
        name: impl Into<String>,
        stats: Vec<Option<CellStats>>,
    ) -> Result<()> {
        let name = name.into();
        if stats.len() != self.grid.len() {
            return Err(Error::Alignment(format!("stats for {name} misaligned")));
        }
        self.stats.insert(name, stats);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.layers.get(name).map(Vec::as_slice)
    }

    pub fn require(&self, name: &str) -> Result<&[f64]> {
        self.get(name)
            .ok_or_else(|| Error::MissingLayer(name.to_string()))
    }

    pub fn stats(&self, name: &str) -> Option<&[Option<CellStats>]> {
        self.stats.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.layers.keys().map(String::as_str)
    }

    pub fn layers(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.layers
    }

    /// Checks that the given layers sum to one per cell, where any of them
    /// is nonzero.
    pub fn check_proportions(&self, names: &[&str]) -> Result<()> {
        let cols: Vec<&[f64]> = names
            .iter()
            .map(|n| self.require(n))
            .collect::<Result<_>>()?;
        for i in 0..self.len() {
            let total: f64 = cols.iter().map(|c| c[i]).sum();
            if total != 0.0 && (total - 1.0).abs() > 1e-9 {
                return Err(Error::Range(format!(
                    "proportions at cell {} sum to {total}",
                    self.cells()[i]
                )));
            }
        }
        Ok(())
    }
}
