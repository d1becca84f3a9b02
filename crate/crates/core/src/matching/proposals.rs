//! Candidate hidden lines from predicted hidden and fleeting junctions.

use serde::{Deserialize, Serialize};

use super::loss::{HiddenJunctionPrediction, DEFAULT_SLOTS};

/// Inference-time confidence cut for hidden junctions.
pub const INFERENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposalMode {
    /// Keep the `min(slots, 2 * n_gt_hidden)` most confident hidden junctions.
    Training { slots: usize },
    /// Drop hidden junctions below [`INFERENCE_THRESHOLD`].
    Inference,
}

impl Default for ProposalMode {
    fn default() -> Self {
        ProposalMode::Training { slots: DEFAULT_SLOTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum JunctionRef {
    Hidden(usize),
    Fleeting(usize),
}

/// Unordered pair; a hidden endpoint always comes first, and of two hidden ones the lower index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LineProposal {
    pub a: JunctionRef,
    pub b: JunctionRef,
}

/// Indices of the hidden junctions that survive the mode's filter, ascending.
pub fn select_hidden(hidden: &[HiddenJunctionPrediction], mode: ProposalMode, n_gt_hidden: usize) -> Vec<usize> {
    let mut keep: Vec<usize> = match mode {
        ProposalMode::Training { slots } => {
            let m = slots.min(2 * n_gt_hidden);
            let mut order: Vec<usize> = (0..hidden.len()).collect();
            order.sort_by(|&i, &j| hidden[j].c.total_cmp(&hidden[i].c));
            order.truncate(m);
            order
        }
        ProposalMode::Inference => (0..hidden.len()).filter(|&i| hidden[i].c >= INFERENCE_THRESHOLD).collect(),
    };
    keep.sort_unstable();
    keep
}

/// All hidden-hidden and hidden-fleeting pairs among the kept junctions.
pub fn enumerate_hidden_line_proposals(
    hidden: &[HiddenJunctionPrediction],
    fleeting_count: usize,
    mode: ProposalMode,
    n_gt_hidden: usize,
) -> Vec<LineProposal> {
    let kept = select_hidden(hidden, mode, n_gt_hidden);
    let mut out = Vec::with_capacity(kept.len() * (kept.len().saturating_sub(1) / 2 + fleeting_count));
    for (k, &i) in kept.iter().enumerate() {
        for &j in &kept[k + 1..] {
            out.push(LineProposal { a: JunctionRef::Hidden(i), b: JunctionRef::Hidden(j) });
        }
        for f in 0..fleeting_count {
            out.push(LineProposal { a: JunctionRef::Hidden(i), b: JunctionRef::Fleeting(f) });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slots(conf: &[f64]) -> Vec<HiddenJunctionPrediction> {
        conf.iter().map(|&c| HiddenJunctionPrediction::new(0.0, 0.0, 1.0, c)).collect()
    }

    #[test]
    fn counts_pairs() {
        let p = enumerate_hidden_line_proposals(&slots(&[0.9, 0.8]), 3, ProposalMode::Inference, 0);
        assert_eq!(p.len(), 7);
        assert_eq!(p.iter().filter(|l| matches!(l.b, JunctionRef::Hidden(_))).count(), 1);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 7);
    }

    #[test]
    fn no_hidden_no_proposals() {
        assert!(enumerate_hidden_line_proposals(&[], 5, ProposalMode::Inference, 0).is_empty());
        assert!(enumerate_hidden_line_proposals(&[], 5, ProposalMode::default(), 3).is_empty());
    }

    #[test]
    fn training_keeps_top_m() {
        let conf: Vec<f64> = (0..30).map(|i| (i as f64 * 7.0 % 30.0) / 30.0).collect();
        let hidden = slots(&conf);
        let kept = select_hidden(&hidden, ProposalMode::Training { slots: 30 }, 4);
        assert_eq!(kept.len(), 8);
        let min_kept = kept.iter().map(|&i| conf[i]).fold(f64::INFINITY, f64::min);
        let dropped_max = (0..30).filter(|i| !kept.contains(i)).map(|i| conf[i]).fold(0.0, f64::max);
        assert!(min_kept > dropped_max);
        assert_eq!(enumerate_hidden_line_proposals(&hidden, 0, ProposalMode::Training { slots: 30 }, 4).len(), 28);
        assert_eq!(select_hidden(&hidden, ProposalMode::Training { slots: 30 }, 20).len(), 30);
    }

    #[test]
    fn inference_drops_low_confidence() {
        let kept = select_hidden(&slots(&[0.49, 0.5, 0.1, 0.99]), ProposalMode::Inference, 0);
        assert_eq!(kept, vec![1, 3]);
    }
}
