//! Bipartite matching, the hidden-junction set loss, line proposals and LOI sampling.

pub mod hungarian;
pub mod loi;
pub mod loss;
pub mod proposals;

pub use hungarian::{brute_force_matching, hungarian, Assignment};
pub use loi::{loi_sample, FeatureGrid};
pub use loss::{hiddentr_loss, HiddenJunctionPrediction, LossBreakdown, LossWeights};
pub use proposals::{enumerate_hidden_line_proposals, JunctionRef, LineProposal, ProposalMode};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MatchingError {
    #[error("non-finite cost at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("{rows} rows exceeds the exhaustive search limit of {max}")]
    TooLarge { rows: usize, max: usize },
    #[error("{rows} rows cannot be matched injectively into {cols} columns")]
    MoreRowsThanColumns { rows: usize, cols: usize },
    #[error("{slots} prediction slots for {ground_truth} ground-truth junctions")]
    TooFewSlots { slots: usize, ground_truth: usize },
    #[error("prediction slot {0} has a non-finite field")]
    InvalidPrediction(usize),
    #[error("feature grid dimensions do not match its data")]
    InvalidGrid,
    #[error("segment endpoints must be finite")]
    InvalidSegment,
    #[error("at least 2 sample points required, got {0}")]
    TooFewPoints(usize),
}
