//! End-to-end dataset generation and export.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::CameraIntrinsics;
use crate::exec::{self, Execution};
use crate::geom::Vec3;

use super::io::{serialize_sample, write_manifest, DatasetManifest, ManifestEntry, SCHEMA_VERSION};
use super::sample::{make_sample, DataSample, SampleConfig, SolidModel};
use super::views::{framing_radius_range, sample_viewpoints, ViewSampling};
use super::voxel::{random_solid, GridLimits};
use super::ForgeError;

pub const TRAIN_SPLIT: &str = "train";
pub const TEST_SPLIT: &str = "test";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateConfig {
    pub seed: u64,
    pub solids: usize,
    pub views: usize,
    /// Fraction of solids assigned to the training split.
    pub split_ratio: f64,
    pub grid: GridLimits,
    pub intrinsics: CameraIntrinsics,
    pub sample: SampleConfig,
    /// Projected bounding-sphere height as a fraction of the image height.
    pub framing: (f64, f64),
}

impl Default for GenerateConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            solids: 100,
            views: 24,
            split_ratio: 0.9,
            grid: GridLimits::default(),
            intrinsics: CameraIntrinsics::default(),
            sample: SampleConfig::default(),
            framing: (0.60, 0.85),
        }
    }
}

impl GenerateConfig {
    pub fn validate(&self) -> Result<(), ForgeError> {
        if self.solids == 0 || self.views == 0 {
            return Err(ForgeError::InvalidConfig("solids and views must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.split_ratio) {
            return Err(ForgeError::InvalidConfig(format!("split ratio {} outside [0, 1]", self.split_ratio)));
        }
        let (lo, hi) = self.framing;
        if !(lo > 0.0 && lo <= hi && hi < 1.0) {
            return Err(ForgeError::InvalidConfig(format!("framing range {:?} invalid", self.framing)));
        }
        self.intrinsics.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SplitData {
    pub manifest: DatasetManifest,
    pub samples: Vec<DataSample>,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub splits: Vec<SplitData>,
    pub rejected_views: usize,
    /// Solids for which no view was accepted.
    pub dropped_solids: Vec<u64>,
}

impl GeneratedDataset {
    pub fn sample_count(&self) -> usize {
        self.splits.iter().map(|s| s.samples.len()).sum()
    }
}

/// Distinct random solids, duplicates (up to cube symmetry) rejected.
pub fn generate_solids(config: &GenerateConfig) -> Result<Vec<(SolidModel, u64)>, ForgeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut seen = BTreeSet::new();
    let mut solids = Vec::with_capacity(config.solids);
    let budget = config.solids * 50 + 100;
    for _ in 0..budget {
        if solids.len() == config.solids {
            break;
        }
        let solid_seed: u64 = rng.gen();
        let voxels = random_solid(solid_seed, &config.grid)?;
        if !seen.insert(voxels.canonical_key()) {
            continue;
        }
        let id = solids.len() as u64;
        solids.push((
            SolidModel {
                id,
                mesh: voxels.boundary_mesh(),
                wireframe: voxels.wireframe(),
            },
            solid_seed,
        ));
    }
    if solids.len() < config.solids {
        log::warn!(
            "only {} distinct solids found for the requested {}; grid limits are too small",
            solids.len(),
            config.solids
        );
    }
    Ok(solids)
}

/// Renders every accepted view of one solid.
pub fn render_solid(
    solid: &SolidModel,
    view_seed: u64,
    config: &GenerateConfig,
) -> (Vec<DataSample>, usize) {
    let range = framing_radius_range(solid.bounding_radius(), &config.intrinsics, config.framing);
    let sampling = ViewSampling {
        count: config.views,
        min_axis_angle_deg: config.sample.min_axis_angle_deg,
        ..ViewSampling::default()
    };
    let poses = sample_viewpoints(view_seed, range, Vec3::ZERO, &sampling);
    let mut samples = Vec::new();
    let mut rejected = 0;
    for (view, pose) in poses.iter().enumerate() {
        match make_sample(solid, pose, view as u32, &config.intrinsics, &config.sample) {
            Ok(s) => samples.push(s),
            Err(ForgeError::RejectedView(reason)) => {
                log::debug!("solid {} view {view} rejected: {reason}", solid.id);
                rejected += 1;
            }
            Err(e) => {
                log::warn!("solid {} view {view} failed: {e}", solid.id);
                rejected += 1;
            }
        }
    }
    (samples, rejected)
}

pub fn generate_dataset(config: &GenerateConfig, mode: Execution) -> Result<GeneratedDataset, ForgeError> {
    config.validate()?;
    let solids = generate_solids(config)?;
    let rendered = exec::map(mode, &solids, |(solid, solid_seed)| {
        render_solid(solid, solid_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ config.seed, config)
    });

    // Split by solid so no solid appears in both splits.
    let mut order: Vec<u64> = solids.iter().map(|(s, _)| s.id).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5EED_5B11_7000_0000);
    order.shuffle(&mut rng);
    let n_train = (config.split_ratio * order.len() as f64).round() as usize;
    let train: BTreeSet<u64> = order[..n_train].iter().copied().collect();

    let config_value = serde_json::to_value(config).expect("config serializes");
    let mut splits = Vec::new();
    let mut rejected_views = 0;
    let mut dropped_solids = Vec::new();
    let mut buckets: [Vec<DataSample>; 2] = Default::default();
    for ((solid, _), (samples, rejected)) in solids.iter().zip(rendered) {
        rejected_views += rejected;
        if samples.is_empty() {
            dropped_solids.push(solid.id);
        }
        let bucket = if train.contains(&solid.id) { 0 } else { 1 };
        buckets[bucket].extend(samples);
    }
    for (name, samples) in [TRAIN_SPLIT, TEST_SPLIT].into_iter().zip(buckets) {
        let manifest = DatasetManifest {
            schema_version: SCHEMA_VERSION,
            split: name.to_string(),
            seed: config.seed,
            config: config_value.clone(),
            samples: samples
                .iter()
                .map(|s| ManifestEntry {
                    sample_id: s.sample_id.clone(),
                    solid_id: s.solid_id,
                    view_id: s.view_id,
                    path: s.sample_id.clone(),
                })
                .collect(),
        };
        splits.push(SplitData { manifest, samples });
    }
    Ok(GeneratedDataset {
        splits,
        rejected_views,
        dropped_solids,
    })
}

/// Writes all samples, then each split's manifest. A failure leaves no manifest behind.
pub fn write_dataset(dataset: &GeneratedDataset, root: &Path, mode: Execution) -> Result<(), ForgeError> {
    fs::create_dir_all(root).map_err(|e| ForgeError::io(root, e))?;
    for split in &dataset.splits {
        let dir = root.join(&split.manifest.split);
        fs::create_dir_all(&dir).map_err(|e| ForgeError::io(&dir, e))?;
        let stale = dir.join(super::io::MANIFEST_FILE);
        if stale.exists() {
            fs::remove_file(&stale).map_err(|e| ForgeError::io(&stale, e))?;
        }
        exec::map(mode, &split.samples, |s| serialize_sample(s, &dir.join(&s.sample_id)))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
    }
    for split in &dataset.splits {
        write_manifest(&split.manifest, &root.join(&split.manifest.split))?;
    }
    Ok(())
}
