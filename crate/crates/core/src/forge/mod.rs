//! Procedural dataset generation: voxel solids, viewpoint sampling, labeled
//! samples, on-disk layout, statistics and viewpoint curation.

pub mod curation;
pub mod io;
pub mod overlay;
pub mod pipeline;
pub mod sample;
pub mod stats;
pub mod views;
pub mod voxel;

use std::path::PathBuf;

use thiserror::Error;

use crate::camera::CameraError;
use crate::visibility::VisibilityError;
use crate::wireframe::{Violation, WireframeError};

pub use curation::{apply_curation, CurationLog, CurationOutcome, Vote};
pub use io::{deserialize_sample, load_sample, read_manifest, serialize_sample, DatasetManifest, ManifestEntry, SCHEMA_VERSION};
pub use pipeline::{generate_dataset, write_dataset, GenerateConfig, GeneratedDataset, SplitData, TEST_SPLIT, TRAIN_SPLIT};
pub use sample::{make_sample, DataSample, RejectReason, SampleConfig, SolidModel};
pub use stats::{compute_stats, SplitStats, StatRow, StatsSummary};
pub use views::{framing_radius_range, sample_viewpoints, ViewSampling};
pub use voxel::{generate_solid, GridLimits, VoxelSolid};

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid solid: {0}")]
    InvalidSolid(String),
    #[error("view rejected: {0}")]
    RejectedView(RejectReason),
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at byte {offset}: {message}")]
    Parse { path: PathBuf, offset: usize, message: String },
    #[error("schema version mismatch in {path}: expected {expected}, found {found}")]
    SchemaVersion { path: PathBuf, expected: u32, found: u64 },
    #[error("sample {sample} violates wireframe invariants: {violations:?}")]
    InvalidSample { sample: String, violations: Vec<Violation> },
    #[error("image error: {0}")]
    Image(String),
    #[error("empty split {0}")]
    EmptySplit(String),
    #[error("unknown view id(s) in curation log: {0:?}")]
    UnknownViews(Vec<String>),
    #[error("voter {0:?} is not in the roster")]
    UnknownVoter(String),
    #[error("{} view(s) lack a full set of votes: {views:?}", views.len())]
    PartialVotes { views: Vec<String> },
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Visibility(#[from] VisibilityError),
    #[error(transparent)]
    Wireframe(#[from] WireframeError),
}

impl ForgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ForgeError::Io { path: path.into(), source }
    }
}
