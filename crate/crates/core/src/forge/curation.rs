//! Human viewpoint curation: three voters mark each rendered view keep/discard.
//!
//! A view is discarded when more than half of the roster votes to discard it.
//! A solid with three or fewer surviving views is dropped entirely.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::DatasetManifest;
use super::ForgeError;

pub const ROSTER_SIZE: usize = 3;
/// Solids keeping this many views or fewer are removed.
pub const MAX_VIEWS_FOR_REMOVAL: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub view_id: String,
    pub voter: String,
    pub keep: bool,
    /// Milliseconds since the Unix epoch; informational only.
    #[serde(default)]
    pub timestamp: u64,
}

/// Append-only vote log. A later vote by the same voter on the same view supersedes earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurationLog {
    pub votes: Vec<Vote>,
}

impl CurationLog {
    pub fn read_jsonl(path: &Path) -> Result<Self, ForgeError> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let file = fs::File::open(path).map_err(|e| ForgeError::io(path, e))?;
        let mut votes = Vec::new();
        let mut offset = 0usize;
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| ForgeError::io(path, e))?;
            if !line.trim().is_empty() {
                let vote: Vote = serde_json::from_str(&line).map_err(|e| ForgeError::Parse {
                    path: path.into(),
                    offset: offset + e.column().saturating_sub(1),
                    message: e.to_string(),
                })?;
                votes.push(vote);
            }
            offset += line.len() + 1;
        }
        Ok(Self { votes })
    }

    /// Appends one vote and flushes it to stable storage before returning.
    pub fn append_jsonl(path: &Path, vote: &Vote) -> Result<(), ForgeError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| ForgeError::io(path, e))?;
        let mut line = serde_json::to_string(vote).expect("vote serializes");
        line.push('\n');
        file.write_all(line.as_bytes()).map_err(|e| ForgeError::io(path, e))?;
        file.sync_data().map_err(|e| ForgeError::io(path, e))
    }

    pub fn push(&mut self, vote: Vote) {
        self.votes.push(vote);
    }

    /// Effective decision per (view, voter).
    pub fn effective(&self) -> BTreeMap<(String, String), bool> {
        let mut out = BTreeMap::new();
        for v in &self.votes {
            out.insert((v.view_id.clone(), v.voter.clone()), v.keep);
        }
        out
    }

    /// Effective votes for one view, keyed by voter.
    pub fn votes_for(&self, view_id: &str) -> BTreeMap<String, bool> {
        let mut out = BTreeMap::new();
        for v in self.votes.iter().filter(|v| v.view_id == view_id) {
            out.insert(v.voter.clone(), v.keep);
        }
        out
    }
}

pub fn validate_roster(roster: &[String]) -> Result<(), ForgeError> {
    let unique: BTreeSet<_> = roster.iter().collect();
    if roster.len() != ROSTER_SIZE || unique.len() != ROSTER_SIZE {
        return Err(ForgeError::InvalidConfig(format!(
            "voter roster must contain exactly {ROSTER_SIZE} distinct ids, got {roster:?}"
        )));
    }
    Ok(())
}

/// Whether the view survives given its effective votes; missing votes count as keep.
pub fn view_survives(votes: &BTreeMap<String, bool>, roster_len: usize) -> bool {
    let discards = votes.values().filter(|&&keep| !keep).count();
    discards * 2 <= roster_len
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurationOutcome {
    pub manifests: Vec<DatasetManifest>,
    pub discarded_views: Vec<String>,
    pub removed_solids: Vec<u64>,
    /// Views that were missing votes (only non-empty in partial mode).
    pub partial_views: Vec<String>,
}

/// Filters manifests by the vote log.
pub fn apply_curation(
    manifests: &[DatasetManifest],
    log: &CurationLog,
    roster: &[String],
    allow_partial: bool,
) -> Result<CurationOutcome, ForgeError> {
    validate_roster(roster)?;
    let known: BTreeSet<&str> = manifests.iter().flat_map(|m| m.samples.iter().map(|s| s.sample_id.as_str())).collect();
    let unknown: BTreeSet<String> = log
        .votes
        .iter()
        .filter(|v| !known.contains(v.view_id.as_str()))
        .map(|v| v.view_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(ForgeError::UnknownViews(unknown.into_iter().collect()));
    }
    if let Some(v) = log.votes.iter().find(|v| !roster.contains(&v.voter)) {
        return Err(ForgeError::UnknownVoter(v.voter.clone()));
    }

    let effective = log.effective();
    let mut per_view: BTreeMap<&str, BTreeMap<String, bool>> = BTreeMap::new();
    for ((view, voter), keep) in &effective {
        per_view.entry(view.as_str()).or_default().insert(voter.clone(), *keep);
    }

    let mut partial = Vec::new();
    for id in &known {
        let n = per_view.get(id).map_or(0, |v| v.len());
        if n < roster.len() {
            partial.push(id.to_string());
        }
    }
    if !partial.is_empty() {
        if !allow_partial {
            return Err(ForgeError::PartialVotes { views: partial });
        }
        log::warn!("{} view(s) lack votes; missing votes are treated as keep", partial.len());
    }

    let empty = BTreeMap::new();
    let mut discarded = Vec::new();
    let mut removed_solids = Vec::new();
    let mut out = Vec::with_capacity(manifests.len());
    for m in manifests {
        let mut survivors: BTreeMap<u64, Vec<_>> = BTreeMap::new();
        for entry in &m.samples {
            let votes = per_view.get(entry.sample_id.as_str()).unwrap_or(&empty);
            if view_survives(votes, roster.len()) {
                survivors.entry(entry.solid_id).or_default().push(entry.clone());
            } else {
                discarded.push(entry.sample_id.clone());
            }
        }
        let mut kept = Vec::new();
        for solid in m.solid_ids() {
            match survivors.remove(&solid) {
                Some(views) if views.len() > MAX_VIEWS_FOR_REMOVAL => kept.extend(views),
                _ => removed_solids.push(solid),
            }
        }
        kept.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
        out.push(DatasetManifest {
            samples: kept,
            ..m.clone()
        });
    }
    Ok(CurationOutcome {
        manifests: out,
        discarded_views: discarded,
        removed_solids,
        partial_views: partial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::io::{ManifestEntry, SCHEMA_VERSION};
    use crate::forge::sample::sample_id;

    fn roster() -> Vec<String> {
        vec!["ann".into(), "bo".into(), "cy".into()]
    }

    fn manifest(solids: &[(u64, u32)]) -> DatasetManifest {
        let mut samples = Vec::new();
        for &(solid, views) in solids {
            for v in 0..views {
                let id = sample_id(solid, v);
                samples.push(ManifestEntry { sample_id: id.clone(), solid_id: solid, view_id: v, path: id });
            }
        }
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            split: "train".into(),
            seed: 1,
            config: serde_json::Value::Null,
            samples,
        }
    }

    fn vote_all(log: &mut CurationLog, m: &DatasetManifest, keep: impl Fn(&str, &str) -> bool) {
        for s in &m.samples {
            for voter in roster() {
                let k = keep(&s.sample_id, &voter);
                log.push(Vote { view_id: s.sample_id.clone(), voter, keep: k, timestamp: 0 });
            }
        }
    }

    #[test]
    fn majority_rule() {
        let m = manifest(&[(0, 6)]);
        let mut log = CurationLog::default();
        let a = sample_id(0, 0);
        let b = sample_id(0, 1);
        vote_all(&mut log, &m, |view, voter| {
            if view == a {
                voter == "ann" // keep, discard, discard
            } else if view == b {
                voter != "cy" // keep, keep, discard
            } else {
                true
            }
        });
        let out = apply_curation(&[m], &log, &roster(), false).unwrap();
        let ids: Vec<_> = out.manifests[0].samples.iter().map(|s| s.sample_id.clone()).collect();
        assert!(!ids.contains(&a));
        assert!(ids.contains(&b));
        assert_eq!(out.discarded_views, vec![a]);
    }

    #[test]
    fn solid_with_three_views_left_is_removed() {
        let m = manifest(&[(0, 24), (1, 24)]);
        let mut log = CurationLog::default();
        vote_all(&mut log, &m, |view, _| !view.starts_with("s00000") || view.ends_with("_v00") || view.ends_with("_v01") || view.ends_with("_v02"));
        let out = apply_curation(&[m], &log, &roster(), false).unwrap();
        assert_eq!(out.removed_solids, vec![0]);
        assert!(out.manifests[0].samples.iter().all(|s| s.solid_id == 1));
        assert_eq!(out.manifests[0].samples.len(), 24);
    }

    #[test]
    fn four_surviving_views_keep_the_solid() {
        let m = manifest(&[(0, 6)]);
        let mut log = CurationLog::default();
        vote_all(&mut log, &m, |view, _| !(view.ends_with("_v04") || view.ends_with("_v05")));
        let out = apply_curation(&[m], &log, &roster(), false).unwrap();
        assert_eq!(out.manifests[0].samples.len(), 4);
        assert!(out.removed_solids.is_empty());
    }

    #[test]
    fn later_vote_supersedes() {
        let m = manifest(&[(0, 4)]);
        let mut log = CurationLog::default();
        vote_all(&mut log, &m, |_, _| false);
        vote_all(&mut log, &m, |_, _| true);
        let out = apply_curation(&[m], &log, &roster(), false).unwrap();
        assert_eq!(out.manifests[0].samples.len(), 4);
    }

    #[test]
    fn partial_votes_refused_unless_allowed() {
        let m = manifest(&[(0, 5)]);
        let mut log = CurationLog::default();
        log.push(Vote { view_id: sample_id(0, 0), voter: "ann".into(), keep: false, timestamp: 0 });
        let err = apply_curation(std::slice::from_ref(&m), &log, &roster(), false).unwrap_err();
        assert!(matches!(err, ForgeError::PartialVotes { ref views } if views.len() == 5));
        let out = apply_curation(&[m], &log, &roster(), true).unwrap();
        assert_eq!(out.manifests[0].samples.len(), 5);
        assert_eq!(out.partial_views.len(), 5);
    }

    #[test]
    fn unknown_view_and_voter_are_errors() {
        let m = manifest(&[(0, 4)]);
        let mut log = CurationLog::default();
        log.push(Vote { view_id: "nope".into(), voter: "ann".into(), keep: true, timestamp: 0 });
        assert!(matches!(apply_curation(std::slice::from_ref(&m), &log, &roster(), true), Err(ForgeError::UnknownViews(_))));
        let mut log = CurationLog::default();
        log.push(Vote { view_id: sample_id(0, 0), voter: "zed".into(), keep: true, timestamp: 0 });
        assert!(matches!(apply_curation(&[m], &log, &roster(), true), Err(ForgeError::UnknownVoter(_))));
        assert!(validate_roster(&["a".into(), "a".into(), "b".into()]).is_err());
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("votes.jsonl");
        let v1 = Vote { view_id: "a".into(), voter: "ann".into(), keep: true, timestamp: 5 };
        let v2 = Vote { view_id: "b".into(), voter: "bo".into(), keep: false, timestamp: 6 };
        CurationLog::append_jsonl(&path, &v1).unwrap();
        CurationLog::append_jsonl(&path, &v2).unwrap();
        assert_eq!(CurationLog::read_jsonl(&path).unwrap().votes, vec![v1, v2]);
        assert!(CurationLog::read_jsonl(&dir.path().join("missing")).unwrap().votes.is_empty());
    }
}
