//! Subcommand implementations. Each returns the process exit code on failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use howire_core::forge::stats::{compute_stats, StatsSummary};
use howire_core::forge::{generate_dataset, read_manifest, write_dataset, CurationLog, ForgeError};
use howire_core::matching::{hiddentr_loss, HiddenJunctionPrediction, LossWeights};
use howire_core::metrics::{evaluate_dataset, load_ground_truth, read_predictions, MetricsError};
use howire_core::oracle::{matching_sweep, visibility_sweep, visibility_sweep_with, NeverOccluded};
use howire_core::{Execution, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::ToolConfig;
use crate::service::{export_json, load_manifests, serve, AppState, VOTES_FILE};

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_ID_MISMATCH: i32 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl fmt::Display) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CmdResult = Result<(), Failure>;

fn forge_failure(e: ForgeError) -> Failure {
    let code = match e {
        ForgeError::Io { .. } | ForgeError::Parse { .. } | ForgeError::SchemaVersion { .. } | ForgeError::InvalidConfig(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    };
    Failure::new(code, e)
}

fn write_file(path: &Path, contents: &str) -> CmdResult {
    fs::write(path, contents).map_err(|e| Failure::new(EXIT_IO, format!("writing {}: {e}", path.display())))
}

pub fn generate(config: &ToolConfig) -> CmdResult {
    let gen = config.generate_config();
    let dataset = generate_dataset(&gen, Execution::default()).map_err(forge_failure)?;
    write_dataset(&dataset, &config.data_root, Execution::default()).map_err(forge_failure)?;
    let counts: Vec<String> = dataset
        .splits
        .iter()
        .map(|s| format!("{} {} ({} solids)", s.manifest.split, s.samples.len(), s.manifest.solid_ids().len()))
        .collect();
    println!(
        "generated {} samples: {}; {} views rejected; {} solids without views; written to {}",
        dataset.sample_count(),
        counts.join(", "),
        dataset.rejected_views,
        dataset.dropped_solids.len(),
        config.data_root.display()
    );
    Ok(())
}

pub fn stats(config: &ToolConfig) -> CmdResult {
    let splits = load_manifests(&config.data_root).map_err(forge_failure)?;
    let mut summary = StatsSummary { splits: Vec::new() };
    for (dir, manifest) in &splits {
        if manifest.samples.is_empty() {
            log::warn!("split {} is empty", manifest.split);
            continue;
        }
        summary.splits.push(compute_stats(manifest, dir).map_err(forge_failure)?);
    }
    print!("{}", summary.to_table());
    let json = serde_json::to_string_pretty(&summary).expect("stats serialize") + "\n";
    write_file(&config.data_root.join("stats.json"), &json)
}

pub fn eval(config: &ToolConfig, predictions: &Path, split: &str, output: Option<PathBuf>) -> CmdResult {
    let split_dir = config.data_root.join(split);
    let manifest = read_manifest(&split_dir).map_err(forge_failure)?;
    let metrics_failure = |e: MetricsError| match e {
        MetricsError::UnknownSamples(_) => Failure::new(EXIT_ID_MISMATCH, e),
        MetricsError::Io { .. } | MetricsError::Parse { .. } => Failure::new(EXIT_IO, e),
        MetricsError::Forge(f) => forge_failure(f),
        other => Failure::new(EXIT_FAILURE, other),
    };
    let preds = read_predictions(predictions).map_err(metrics_failure)?;
    let gt = load_ground_truth(&manifest, &split_dir, Execution::default()).map_err(metrics_failure)?;
    let report = evaluate_dataset(&preds, &gt, Execution::default()).map_err(metrics_failure)?;
    print!("{}", report.to_text());
    let out = output.unwrap_or_else(|| config.data_root.join(format!("eval_{split}.json")));
    write_file(&out, &(report.to_json() + "\n"))
}

pub fn oracle_check(config: &ToolConfig, instances: usize, inject_fault: bool) -> CmdResult {
    let gen = config.generate_config();
    let vis = if inject_fault {
        visibility_sweep_with(&gen, Execution::default(), |_| Box::new(NeverOccluded))
    } else {
        visibility_sweep(&gen, Execution::default())
    }
    .map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    println!(
        "visibility: {} solids, {} views, {} queries, {} mismatches",
        vis.solids, vis.views, vis.queries, vis.mismatch_count
    );
    let matching = matching_sweep(instances, 7, config.seed, Execution::default());
    println!("matching: {} instances, {} mismatches", matching.instances, matching.mismatch_count);
    if let Some(m) = vis.mismatches.first() {
        eprintln!("first visibility mismatch: {}", serde_json::to_string(m).expect("serializes"));
    }
    if let Some(m) = matching.mismatches.first() {
        eprintln!("first matching mismatch: {}", serde_json::to_string(m).expect("serializes"));
    }
    if vis.passed() && matching.passed() {
        println!("oracle check passed");
        Ok(())
    } else {
        Err(Failure::new(EXIT_FAILURE, "oracle check failed"))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LossInput {
    pub predictions: Vec<HiddenJunctionPrediction>,
    /// (pixel x, pixel y, depth) per ground-truth hidden junction.
    pub ground_truth: Vec<[f64; 3]>,
    #[serde(default)]
    pub weights: Option<LossWeights>,
}

impl LossInput {
    pub fn worked_example() -> Self {
        Self {
            predictions: vec![
                HiddenJunctionPrediction::new(12.0, 19.0, 0.7, 0.8),
                HiddenJunctionPrediction::new(0.0, 0.0, 0.0, 1e-7),
            ],
            ground_truth: vec![[10.0, 20.0, 0.5]],
            weights: None,
        }
    }
}

pub fn loss_check(input: Option<&Path>) -> CmdResult {
    let input = match input {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?
        }
        None => LossInput::worked_example(),
    };
    let gt: Vec<Vec3> = input.ground_truth.iter().map(|&p| Vec3::from(p)).collect();
    let loss = hiddentr_loss(&input.predictions, &gt, input.weights.unwrap_or_default())
        .map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    println!("{}", serde_json::to_string_pretty(&loss).expect("serializes"));
    Ok(())
}

pub fn curate_serve(config: &ToolConfig) -> CmdResult {
    let state = AppState::load(&config.data_root, config.roster.clone()).map_err(forge_failure)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(EXIT_FAILURE, e))?;
    runtime.block_on(serve(state, &config.bind)).map_err(|e| Failure::new(EXIT_FAILURE, e))
}

pub fn curate_export(config: &ToolConfig, allow_partial: bool, output: Option<PathBuf>) -> CmdResult {
    let manifests: Vec<_> = load_manifests(&config.data_root).map_err(forge_failure)?.into_iter().map(|(_, m)| m).collect();
    let log = CurationLog::read_jsonl(&config.data_root.join(VOTES_FILE)).map_err(forge_failure)?;
    let outcome = howire_core::forge::apply_curation(&manifests, &log, &config.roster, allow_partial).map_err(forge_failure)?;
    if !outcome.partial_views.is_empty() {
        eprintln!(
            "WARNING: {} view(s) were exported with missing votes counted as keep",
            outcome.partial_views.len()
        );
    }
    let out = output.unwrap_or_else(|| config.data_root.join("curated.json"));
    write_file(&out, &export_json(&outcome))?;
    println!(
        "exported {} views; {} discarded, {} solids removed; written to {}",
        outcome.manifests.iter().map(|m| m.samples.len()).sum::<usize>(),
        outcome.discarded_views.len(),
        outcome.removed_solids.len(),
        out.display()
    );
    Ok(())
}
