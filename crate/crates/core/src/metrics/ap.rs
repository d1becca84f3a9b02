//! Precision-envelope average precision and greedy detection matching.

use serde::{Deserialize, Serialize};

/// One scored detection after matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub score: f64,
    pub true_positive: bool,
}

/// Detections pooled across samples for one report cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PrCurve {
    pub detections: Vec<Detection>,
    pub ground_truth: usize,
}

impl PrCurve {
    pub fn merge(&mut self, other: PrCurve) {
        self.detections.extend(other.detections);
        self.ground_truth += other.ground_truth;
    }

    pub fn true_positives(&self) -> usize {
        self.detections.iter().filter(|d| d.true_positive).count()
    }

    /// Area under the precision envelope, in percent.
    pub fn average_precision(&self) -> f64 {
        average_precision(&self.detections, self.ground_truth)
    }
}

/// All-points interpolated AP ×100. Equal scores keep their input order.
pub fn average_precision(detections: &[Detection], ground_truth: usize) -> f64 {
    if ground_truth == 0 {
        if !detections.is_empty() {
            log::warn!("{} detections scored against an empty ground truth", detections.len());
        }
        return 0.0;
    }
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));

    let mut precision = Vec::with_capacity(order.len());
    let mut tp = 0usize;
    for (rank, &i) in order.iter().enumerate() {
        if detections[i].true_positive {
            tp += 1;
        }
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let area: f64 = order
        .iter()
        .zip(&precision)
        .filter(|(&i, _)| detections[i].true_positive)
        .map(|(_, &p)| p)
        .fold(0.0, |a, p| a + p);
    100.0 * area / ground_truth as f64
}

/// Greedy one-to-one matching in descending score (stable).
///
/// `distance(pred, gt)` is evaluated for every unmatched ground truth; the nearest one
/// is claimed when it is within `threshold`.
pub fn greedy_match<F>(scores: &[f64], ground_truth: usize, threshold: f64, distance: F) -> Vec<Detection>
where
    F: Fn(usize, usize) -> f64,
{
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut taken = vec![false; ground_truth];
    let mut out = vec![Detection { score: 0.0, true_positive: false }; scores.len()];
    for &p in &order {
        let nearest = (0..ground_truth)
            .filter(|&g| !taken[g])
            .map(|g| (g, distance(p, g)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let hit = match nearest {
            Some((g, d)) if d <= threshold => {
                taken[g] = true;
                true
            }
            _ => false,
        };
        out[p] = Detection { score: scores[p], true_positive: hit };
    }
    out
}
