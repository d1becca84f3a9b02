//! Evaluation: junction AP and line sAP reports.

pub mod ap;
pub mod eval;

use std::path::PathBuf;

pub use ap::{average_precision, greedy_match, Detection, PrCurve};
pub use eval::{
    evaluate_dataset, gt_as_predictions, junction_ap, line_sap, load_ground_truth, normalize_model_scale,
    perturb_predictions, read_predictions, EvalReport, GroundTruthSample, LinePredicate, PredictedJunction,
    PredictedLine, ReportRow, ReportTable, SamplePredictions, ScaleNormalization, ScoredJunction, ScoredLine,
    JUNCTION_2D_THRESHOLDS, JUNCTION_3D_THRESHOLDS, LINE_2D_THRESHOLDS, LINE_3D_THRESHOLDS,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("degenerate model: {0}")]
    Degenerate(String),
    #[error("predictions reference samples missing from the manifest: {}", .0.join(", "))]
    UnknownSamples(Vec<String>),
    #[error("sample {0} appears more than once in the predictions")]
    DuplicateSample(String),
    #[error("invalid prediction for {sample}: {message}")]
    InvalidPrediction { sample: String, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Forge(#[from] crate::forge::ForgeError),
}
