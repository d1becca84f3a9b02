//! Per-split counts of observable/hidden junctions and lines.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::wireframe::{LineVisibility, WireframeGraph};

use super::io::{load_sample, DatasetManifest};
use super::ForgeError;

pub const QUANTITIES: [&str; 4] = ["J_vis", "J_hidden", "L_vis", "L_hidden"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub quantity: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: String,
    pub samples: usize,
    pub rows: Vec<StatRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSummary {
    pub splits: Vec<SplitStats>,
}

fn describe(quantity: &str, values: &[f64]) -> StatRow {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    StatRow {
        quantity: quantity.to_string(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: var.sqrt(),
    }
}

/// `J_vis` counts observable junctions (visible and fleeting).
pub fn split_stats(split: &str, graphs: &[WireframeGraph]) -> Result<SplitStats, ForgeError> {
    if graphs.is_empty() {
        return Err(ForgeError::EmptySplit(split.to_string()));
    }
    let mut columns: [Vec<f64>; 4] = Default::default();
    for g in graphs {
        let observable = g.junction_visibility.iter().filter(|&&v| v).count();
        columns[0].push(observable as f64);
        columns[1].push((g.junction_count() - observable) as f64);
        columns[2].push(g.count_lines(LineVisibility::Visible) as f64);
        columns[3].push(g.count_lines(LineVisibility::Hidden) as f64);
    }
    Ok(SplitStats {
        split: split.to_string(),
        samples: graphs.len(),
        rows: QUANTITIES.iter().zip(&columns).map(|(q, v)| describe(q, v)).collect(),
    })
}

/// Loads every sample listed in the manifest (from `split_dir`) and summarizes it.
pub fn compute_stats(manifest: &DatasetManifest, split_dir: &Path) -> Result<SplitStats, ForgeError> {
    let graphs = manifest
        .samples
        .iter()
        .map(|e| load_sample(&split_dir.join(&e.path), false).map(|l| l.sample.wireframe))
        .collect::<Result<Vec<_>, _>>()?;
    split_stats(&manifest.split, &graphs)
}

impl StatsSummary {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for s in &self.splits {
            let _ = writeln!(out, "split: {} ({} samples)", s.split, s.samples);
            let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>8} {:>8}", "", "min", "max", "mean", "std");
            for r in &s.rows {
                let _ = writeln!(out, "{:<10} {:>8.0} {:>8.0} {:>8.2} {:>8.2}", r.quantity, r.min, r.max, r.mean, r.std);
            }
        }
        out
    }
}
