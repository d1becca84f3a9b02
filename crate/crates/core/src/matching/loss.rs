//! Set-prediction loss over a fixed number of hidden-junction slots.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

use super::hungarian::{hungarian, Assignment};
use super::MatchingError;

pub const CONFIDENCE_EPS: f64 = 1e-7;
pub const DEFAULT_LAMBDA_XY: f64 = 5.0;
pub const DEFAULT_LAMBDA_Z: f64 = 0.05;
/// Number of prediction slots.
pub const DEFAULT_SLOTS: usize = 30;

/// One slot: pixel position, depth and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenJunctionPrediction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub c: f64,
}

impl HiddenJunctionPrediction {
    pub fn new(x: f64, y: f64, z: f64, c: f64) -> Self {
        Self { x, y, z, c }
    }

    /// Ground-truth point in (pixel x, pixel y, depth) form.
    pub fn target(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn clamped_confidence(&self) -> f64 {
        self.c.clamp(CONFIDENCE_EPS, 1.0 - CONFIDENCE_EPS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_xy: f64,
    pub lambda_z: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_xy: DEFAULT_LAMBDA_XY, lambda_z: DEFAULT_LAMBDA_Z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub classification: f64,
    /// Already multiplied by `lambda_xy`.
    pub xy: f64,
    /// Already multiplied by `lambda_z`.
    pub z: f64,
    /// Ground-truth index to slot index.
    pub assignment: Assignment,
}

fn l1_xy(p: &HiddenJunctionPrediction, g: Vec3) -> f64 {
    (p.x - g.x).abs() + (p.y - g.y).abs()
}

/// Matching cost between every ground-truth junction (rows) and slot (columns).
pub fn matching_cost(
    predictions: &[HiddenJunctionPrediction],
    ground_truth: &[Vec3],
    weights: LossWeights,
) -> Vec<Vec<f64>> {
    ground_truth
        .iter()
        .map(|&g| {
            predictions
                .iter()
                .map(|p| weights.lambda_xy * l1_xy(p, g) + weights.lambda_z * (p.z - g.z).abs() - p.clamped_confidence())
                .collect()
        })
        .collect()
}

/// Sum in ascending order so the result does not depend on slot order.
fn canonical_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.into_iter().sum()
}

/// Ground truth is given as (pixel x, pixel y, depth).
pub fn hiddentr_loss(
    predictions: &[HiddenJunctionPrediction],
    ground_truth: &[Vec3],
    weights: LossWeights,
) -> Result<LossBreakdown, MatchingError> {
    if predictions.len() < ground_truth.len() {
        return Err(MatchingError::TooFewSlots { slots: predictions.len(), ground_truth: ground_truth.len() });
    }
    if let Some(i) = predictions
        .iter()
        .position(|p| !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite() && p.c.is_finite()))
    {
        return Err(MatchingError::InvalidPrediction(i));
    }
    let assignment = hungarian(&matching_cost(predictions, ground_truth, weights))?;

    let mut matched = vec![false; predictions.len()];
    let mut positive = Vec::with_capacity(ground_truth.len());
    let mut xy = Vec::with_capacity(ground_truth.len());
    let mut z = Vec::with_capacity(ground_truth.len());
    for (gi, slot) in assignment.pairs() {
        matched[slot] = true;
        let p = &predictions[slot];
        let g = ground_truth[gi];
        positive.push(-p.clamped_confidence().ln());
        xy.push(weights.lambda_xy * l1_xy(p, g));
        z.push(weights.lambda_z * (p.z - g.z).abs());
    }
    let negative: Vec<f64> = predictions
        .iter()
        .zip(&matched)
        .filter(|(_, &m)| !m)
        .map(|(p, _)| -(1.0 - p.clamped_confidence()).ln())
        .collect();

    let classification = canonical_sum(positive) + canonical_sum(negative);
    let xy = canonical_sum(xy);
    let z = canonical_sum(z);
    Ok(LossBreakdown { total: classification + xy + z, classification, xy, z, assignment })
}
