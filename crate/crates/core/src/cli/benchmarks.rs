//! Named reference grids shipped in `data/benchmarks.toml`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Deserialize;

use super::config::{AnalysisDoc, ConfigDocument};
use super::table::ResultTable;
use crate::analysis::{run, AnalysisResult, InPlaneLoading, RunConfig};
use crate::material::TemperatureProfile;
use crate::{Error, Result};

const DATA: &str = include_str!("../../data/benchmarks.toml");

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Registry {
    benchmark: Vec<Benchmark>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Benchmark {
    pub id: String,
    pub title: String,
    /// Scaled quantity compared unless a row names another.
    pub quantity: String,
    pub gradient_indices: Vec<f64>,
    pub base: ConfigDocument,
    #[serde(rename = "row")]
    pub rows: Vec<BenchmarkRow>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkRow {
    pub label: String,
    #[serde(default)]
    pub set: Overrides,
    pub quantity: Option<String>,
    pub reference: Vec<f64>,
}

/// Per-row changes to the base configuration.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub degree: Option<usize>,
    pub control_points: Option<usize>,
    /// Sets `h` from `a`.
    pub a_over_h: Option<f64>,
    pub b_m: Option<f64>,
    pub skew_deg: Option<f64>,
    pub edges: Option<String>,
    pub loading: Option<InPlaneLoading>,
    pub profile: Option<TemperatureProfile>,
}

impl Overrides {
    pub fn apply(&self, doc: &mut ConfigDocument) -> Result<()> {
        if let Some(p) = self.degree {
            doc.mesh.degree = p;
        }
        if let Some(n) = self.control_points {
            doc.mesh.control_points = n;
        }
        if let Some(r) = self.a_over_h {
            doc.geometry.h_m = doc.geometry.a_m / r;
        }
        if let Some(b) = self.b_m {
            doc.geometry.b_m = b;
        }
        if let Some(s) = self.skew_deg {
            doc.geometry.skew_deg = s;
        }
        if let Some(e) = &self.edges {
            doc.boundary.edges = e.clone();
        }
        if let Some(l) = self.loading {
            match &mut doc.analysis {
                AnalysisDoc::MechanicalBuckling { loading } => *loading = l,
                _ => return Err(Error::Configuration("override 'loading' needs a mechanical buckling run".into())),
            }
        }
        if let Some(p) = self.profile {
            match &mut doc.analysis {
                AnalysisDoc::ThermalBuckling { profile, .. } => *profile = p,
                _ => return Err(Error::Configuration("override 'profile' needs a thermal buckling run".into())),
            }
        }
        Ok(())
    }
}

pub fn registry() -> Result<Vec<Benchmark>> {
    let reg: Registry = toml::from_str(DATA).map_err(|e| Error::Internal(format!("benchmark data file: {e}")))?;
    for b in &reg.benchmark {
        for r in &b.rows {
            if r.reference.len() != b.gradient_indices.len() {
                return Err(Error::Internal(format!(
                    "benchmark {} row '{}': {} references for {} columns",
                    b.id,
                    r.label,
                    r.reference.len(),
                    b.gradient_indices.len()
                )));
            }
        }
    }
    Ok(reg.benchmark)
}

pub fn find(id: &str) -> Result<Benchmark> {
    let all = registry()?;
    let ids: Vec<String> = all.iter().map(|b| b.id.clone()).collect();
    all.into_iter()
        .find(|b| b.id == id)
        .ok_or_else(|| Error::Configuration(format!("unknown benchmark '{id}'; available: {}", ids.join(", "))))
}

/// One cell of a benchmark grid.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub row: usize,
    pub gradient_index: f64,
    pub quantity: String,
    pub reference: Option<f64>,
    pub config: RunConfig,
}

impl Benchmark {
    pub fn cells(&self) -> Result<Vec<GridCell>> {
        let mut out = Vec::new();
        for (ri, row) in self.rows.iter().enumerate() {
            for (&n, &reference) in self.gradient_indices.iter().zip(&row.reference) {
                let mut doc = self.base.clone();
                doc.material.gradient_index = n;
                row.set.apply(&mut doc)?;
                out.push(GridCell {
                    row: ri,
                    gradient_index: n,
                    quantity: row.quantity.clone().unwrap_or_else(|| self.quantity.clone()),
                    reference: (!reference.is_nan()).then_some(reference),
                    config: doc.to_run_config()?,
                });
            }
        }
        Ok(out)
    }

    /// Runs every distinct configuration of the grid once, in parallel.
    pub fn evaluate(&self) -> Result<Vec<(GridCell, AnalysisResult)>> {
        let cells = self.cells()?;
        let mut unique: Vec<&RunConfig> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        let keys: Vec<String> = cells
            .iter()
            .map(|c| {
                let h = c.config.hash();
                if !slot.contains_key(&h) {
                    slot.insert(h.clone(), unique.len());
                    unique.push(&c.config);
                }
                h
            })
            .collect();
        let results: Vec<AnalysisResult> = unique.par_iter().map(|c| run(c)).collect::<Result<_>>()?;
        Ok(cells
            .into_iter()
            .zip(keys)
            .map(|(c, k)| {
                let r = results[slot[&k]].clone();
                (c, r)
            })
            .collect())
    }

    /// Computed values side by side with the references.
    pub fn table(&self) -> Result<ResultTable> {
        let mut t = ResultTable::new(
            ["row", "n", "quantity", "computed", "reference", "rel_deviation", "status"].map(String::from).to_vec(),
        );
        t.meta("benchmark", self.id.clone());
        t.meta("title", self.title.clone());
        for (cell, result) in self.evaluate()? {
            let computed = result.scaled_value(&cell.quantity);
            let dev = match (computed, cell.reference) {
                (Some(c), Some(r)) if r != 0.0 => Some((c - r) / r),
                _ => None,
            };
            t.push(vec![
                self.rows[cell.row].label.clone().into(),
                cell.gradient_index.into(),
                cell.quantity.clone().into(),
                computed.into(),
                cell.reference.into(),
                dev.into(),
                result.status.clone().unwrap_or_default().into(),
            ]);
        }
        Ok(t)
    }
}

/// Id and title of each shipped benchmark.
pub fn list() -> Result<ResultTable> {
    let mut t = ResultTable::new(vec!["id".into(), "rows".into(), "title".into()]);
    for b in registry()? {
        t.push(vec![
            b.id.clone().into(),
            (b.rows.len() * b.gradient_indices.len()).to_string().into(),
            b.title.clone().into(),
        ]);
    }
    Ok(t)
}
