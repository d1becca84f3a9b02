//! Junction AP and line sAP per visibility class, in pixels and normalized model space.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{lift, CameraIntrinsics};
use crate::exec::{self, Execution};
use crate::forge::io::{load_sample, DatasetManifest};
use crate::geom::{Aabb, Vec3};
use crate::wireframe::{JunctionClass, LineVisibility, WireframeGraph};

use super::ap::{greedy_match, PrCurve};
use super::MetricsError;

pub const LINE_3D_THRESHOLDS: [f64; 4] = [0.01, 0.03, 0.05, 0.07];
pub const JUNCTION_3D_THRESHOLDS: [f64; 3] = [0.02, 0.03, 0.05];
pub const JUNCTION_2D_THRESHOLDS: [f64; 2] = [1.0, 2.0];
pub const LINE_2D_THRESHOLDS: [f64; 2] = [10.0, 15.0];

/// Line match predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinePredicate {
    /// Sum of squared endpoint distances, best endpoint ordering.
    SumSquaredEndpoints,
    /// Larger of the two endpoint distances, best endpoint ordering.
    MaxEndpointDistance,
}

impl LinePredicate {
    pub fn distance(self, p: [Vec3; 2], g: [Vec3; 2]) -> f64 {
        let pair = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| match self {
            LinePredicate::SumSquaredEndpoints => (a - c).norm_squared() + (b - d).norm_squared(),
            LinePredicate::MaxEndpointDistance => a.distance(c).max(b.distance(d)),
        };
        pair(p[0], p[1], g[0], g[1]).min(pair(p[0], p[1], g[1], g[0]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredJunction {
    pub position: Vec3,
    pub score: f64,
    pub class: JunctionClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredLine {
    pub endpoints: [Vec3; 2],
    pub score: f64,
    pub class: LineVisibility,
}

fn junction_curve(
    preds: &[ScoredJunction],
    gt: &[ScoredJunction],
    threshold: f64,
    class: Option<JunctionClass>,
) -> PrCurve {
    let keep = |c: JunctionClass| class.is_none_or(|k| k == c);
    let p: Vec<&ScoredJunction> = preds.iter().filter(|j| keep(j.class)).collect();
    let g: Vec<&ScoredJunction> = gt.iter().filter(|j| keep(j.class)).collect();
    let scores: Vec<f64> = p.iter().map(|j| j.score).collect();
    PrCurve {
        detections: greedy_match(&scores, g.len(), threshold, |i, k| p[i].position.distance(g[k].position)),
        ground_truth: g.len(),
    }
}

fn line_curve(
    preds: &[ScoredLine],
    gt: &[ScoredLine],
    threshold: f64,
    predicate: LinePredicate,
    class: Option<LineVisibility>,
) -> PrCurve {
    let keep = |c: LineVisibility| class.is_none_or(|k| k == c);
    let p: Vec<&ScoredLine> = preds.iter().filter(|l| keep(l.class)).collect();
    let g: Vec<&ScoredLine> = gt.iter().filter(|l| keep(l.class)).collect();
    let scores: Vec<f64> = p.iter().map(|l| l.score).collect();
    PrCurve {
        detections: greedy_match(&scores, g.len(), threshold, |i, k| predicate.distance(p[i].endpoints, g[k].endpoints)),
        ground_truth: g.len(),
    }
}

/// Junction AP (percent). `class = None` scores all classes together.
pub fn junction_ap(preds: &[ScoredJunction], gt: &[ScoredJunction], threshold: f64, class: Option<JunctionClass>) -> f64 {
    junction_curve(preds, gt, threshold, class).average_precision()
}

/// Line structural AP (percent).
pub fn line_sap(
    preds: &[ScoredLine],
    gt: &[ScoredLine],
    threshold: f64,
    predicate: LinePredicate,
    class: Option<LineVisibility>,
) -> f64 {
    line_curve(preds, gt, threshold, predicate, class).average_precision()
}

/// Maps a model to unit junction-bbox diagonal, centroid at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleNormalization {
    pub center: Vec3,
    pub scale: f64,
}

impl ScaleNormalization {
    pub fn for_points(points: &[Vec3]) -> Result<Self, MetricsError> {
        if points.len() < 2 {
            return Err(MetricsError::Degenerate("fewer than 2 junctions".into()));
        }
        let diag = Aabb::from_points(points.iter().copied()).diagonal();
        if !(diag > 0.0 && diag.is_finite()) {
            return Err(MetricsError::Degenerate("all junctions coincide".into()));
        }
        let center = points.iter().fold(Vec3::ZERO, |a, &p| a + p) * (1.0 / points.len() as f64);
        Ok(Self { center, scale: 1.0 / diag })
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }
}

pub fn normalize_model_scale(graph: &WireframeGraph) -> Result<(WireframeGraph, ScaleNormalization), MetricsError> {
    let t = ScaleNormalization::for_points(&graph.junctions3d)?;
    let mut out = graph.clone();
    out.junctions3d = graph.junctions3d.iter().map(|&p| t.apply(p)).collect();
    Ok((out, t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedJunction {
    pub x: f64,
    pub y: f64,
    /// Depth along the optical axis; absent for image-only predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub score: f64,
    pub class: JunctionClass,
}

/// Endpoints are `[x, y]` or `[x, y, depth]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedLine {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub score: f64,
    pub class: LineVisibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePredictions {
    pub sample_id: String,
    #[serde(default)]
    pub junctions: Vec<PredictedJunction>,
    #[serde(default)]
    pub lines: Vec<PredictedLine>,
}

impl SamplePredictions {
    fn has_depth(&self) -> bool {
        self.junctions.iter().all(|j| j.z.is_some()) && self.lines.iter().all(|l| l.p1.len() == 3 && l.p2.len() == 3)
    }

    fn check(&self) -> Result<(), MetricsError> {
        let bad = |message: String| MetricsError::InvalidPrediction { sample: self.sample_id.clone(), message };
        for (i, j) in self.junctions.iter().enumerate() {
            if !(j.x.is_finite() && j.y.is_finite() && j.z.is_none_or(f64::is_finite)) {
                return Err(bad(format!("junction {i} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&j.score) {
                return Err(bad(format!("junction {i} score {} outside [0, 1]", j.score)));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            if !matches!(l.p1.len(), 2 | 3) || l.p1.len() != l.p2.len() {
                return Err(bad(format!("line {i} endpoints must both have 2 or 3 coordinates")));
            }
            if l.p1.iter().chain(&l.p2).any(|v| !v.is_finite()) {
                return Err(bad(format!("line {i} has non-finite coordinates")));
            }
            if !(0.0..=1.0).contains(&l.score) {
                return Err(bad(format!("line {i} score {} outside [0, 1]", l.score)));
            }
        }
        Ok(())
    }
}

pub fn read_predictions(path: &Path) -> Result<Vec<SamplePredictions>, MetricsError> {
    let text = fs::read_to_string(path).map_err(|e| MetricsError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| MetricsError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthSample {
    pub sample_id: String,
    /// Camera-frame wireframe with 2D projections.
    pub wireframe: WireframeGraph,
    pub intrinsics: CameraIntrinsics,
}

/// Loads every labeled sample of a split.
pub fn load_ground_truth(
    manifest: &DatasetManifest,
    split_dir: &Path,
    mode: Execution,
) -> Result<Vec<GroundTruthSample>, MetricsError> {
    exec::map(mode, &manifest.samples, |e| {
        let s = load_sample(&split_dir.join(&e.path), false)?.sample;
        Ok(GroundTruthSample { sample_id: e.sample_id.clone(), wireframe: s.wireframe, intrinsics: s.intrinsics })
    })
    .into_iter()
    .collect()
}

/// Evaluation-space views of one sample.
struct Prepared {
    junctions2d: Vec<ScoredJunction>,
    lines2d: Vec<ScoredLine>,
    junctions3d: Vec<ScoredJunction>,
    lines3d: Vec<ScoredLine>,
}

fn pixel(p: [f64; 2]) -> Vec3 {
    Vec3::new(p[0], p[1], 0.0)
}

fn prepare_ground_truth(gt: &GroundTruthSample) -> Result<Prepared, MetricsError> {
    let g = &gt.wireframe;
    let px = g
        .junctions2d
        .as_ref()
        .ok_or_else(|| MetricsError::Degenerate(format!("sample {} has no 2D junctions", gt.sample_id)))?;
    let norm = ScaleNormalization::for_points(&g.junctions3d)?;
    let j3: Vec<Vec3> = g.junctions3d.iter().map(|&p| norm.apply(p)).collect();
    let junctions = |pos: &dyn Fn(usize) -> Vec3| -> Vec<ScoredJunction> {
        (0..g.junction_count())
            .map(|i| ScoredJunction { position: pos(i), score: 1.0, class: g.junction_class[i] })
            .collect()
    };
    let lines = |pos: &dyn Fn(usize) -> Vec3| -> Vec<ScoredLine> {
        g.lines
            .iter()
            .zip(&g.line_visibility)
            .map(|(&(a, b), &class)| ScoredLine { endpoints: [pos(a), pos(b)], score: 1.0, class })
            .collect()
    };
    Ok(Prepared {
        junctions2d: junctions(&|i| pixel(px[i])),
        lines2d: lines(&|i| pixel(px[i])),
        junctions3d: junctions(&|i| j3[i]),
        lines3d: lines(&|i| j3[i]),
    })
}

fn prepare_predictions(p: &SamplePredictions, gt: &GroundTruthSample, with_3d: bool) -> Result<Prepared, MetricsError> {
    let k = &gt.intrinsics;
    let junctions2d = p
        .junctions
        .iter()
        .map(|j| ScoredJunction { position: Vec3::new(j.x, j.y, 0.0), score: j.score, class: j.class })
        .collect();
    let lines2d = p
        .lines
        .iter()
        .map(|l| ScoredLine { endpoints: [pixel([l.p1[0], l.p1[1]]), pixel([l.p2[0], l.p2[1]])], score: l.score, class: l.class })
        .collect();
    let (mut junctions3d, mut lines3d) = (Vec::new(), Vec::new());
    if with_3d {
        let norm = ScaleNormalization::for_points(&gt.wireframe.junctions3d)?;
        let to_model = |x: f64, y: f64, z: f64| -> Result<Vec3, MetricsError> {
            lift(x, y, z, k).map(|q| norm.apply(q)).map_err(|e| MetricsError::InvalidPrediction {
                sample: p.sample_id.clone(),
                message: e.to_string(),
            })
        };
        for j in &p.junctions {
            let z = j.z.expect("depth checked");
            junctions3d.push(ScoredJunction { position: to_model(j.x, j.y, z)?, score: j.score, class: j.class });
        }
        for l in &p.lines {
            let a = to_model(l.p1[0], l.p1[1], l.p1[2])?;
            let b = to_model(l.p2[0], l.p2[1], l.p2[2])?;
            lines3d.push(ScoredLine { endpoints: [a, b], score: l.score, class: l.class });
        }
    }
    Ok(Prepared { junctions2d, lines2d, junctions3d, lines3d })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    Line3d,
    Junction3d,
    Junction2d,
    Line2d,
}

struct TableSpec {
    key: &'static str,
    title: &'static str,
    metric: &'static str,
    measure: Measure,
    thresholds: &'static [f64],
}

const TABLES: [TableSpec; 4] = [
    TableSpec {
        key: "line_sap_3d",
        title: "3D line sAP (normalized model units)",
        metric: "sAP",
        measure: Measure::Line3d,
        thresholds: &LINE_3D_THRESHOLDS,
    },
    TableSpec {
        key: "junction_ap_3d",
        title: "3D junction AP (normalized model units)",
        metric: "AP",
        measure: Measure::Junction3d,
        thresholds: &JUNCTION_3D_THRESHOLDS,
    },
    TableSpec {
        key: "junction_ap_2d",
        title: "2D junction AP (pixels)",
        metric: "AP",
        measure: Measure::Junction2d,
        thresholds: &JUNCTION_2D_THRESHOLDS,
    },
    TableSpec {
        key: "line_sap_2d",
        title: "2D line sAP (sum of squared endpoint distances, pixels^2)",
        metric: "sAP",
        measure: Measure::Line2d,
        thresholds: &LINE_2D_THRESHOLDS,
    },
];

impl Measure {
    fn is_3d(self) -> bool {
        matches!(self, Measure::Line3d | Measure::Junction3d)
    }

    fn rows(self) -> Vec<&'static str> {
        match self {
            Measure::Line3d | Measure::Line2d => vec!["visible", "hidden", "all"],
            Measure::Junction3d | Measure::Junction2d => vec!["visible", "fleeting", "hidden", "all"],
        }
    }
}

fn junction_filter(row: &str) -> Option<JunctionClass> {
    JunctionClass::ALL.into_iter().find(|c| c.as_str() == row)
}

fn line_filter(row: &str) -> Option<LineVisibility> {
    [LineVisibility::Visible, LineVisibility::Hidden].into_iter().find(|c| c.as_str() == row)
}

/// Every (table, row, threshold) cell in report order.
fn cells(with_3d: bool) -> Vec<(&'static TableSpec, &'static str, f64)> {
    TABLES
        .iter()
        .filter(|t| with_3d || !t.measure.is_3d())
        .flat_map(|t| t.measure.rows().into_iter().flat_map(move |r| t.thresholds.iter().map(move |&th| (t, r, th))))
        .collect()
}

fn sample_curves(pred: &Prepared, gt: &Prepared, with_3d: bool) -> Vec<PrCurve> {
    cells(with_3d)
        .into_iter()
        .map(|(t, row, th)| match t.measure {
            Measure::Line3d => line_curve(&pred.lines3d, &gt.lines3d, th, LinePredicate::MaxEndpointDistance, line_filter(row)),
            Measure::Line2d => line_curve(&pred.lines2d, &gt.lines2d, th, LinePredicate::SumSquaredEndpoints, line_filter(row)),
            Measure::Junction3d => junction_curve(&pred.junctions3d, &gt.junctions3d, th, junction_filter(row)),
            Measure::Junction2d => junction_curve(&pred.junctions2d, &gt.junctions2d, th, junction_filter(row)),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub class: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub key: String,
    pub title: String,
    pub metric: String,
    pub thresholds: Vec<f64>,
    pub rows: Vec<ReportRow>,
}

impl ReportTable {
    pub fn value(&self, class: &str, threshold: f64) -> Option<f64> {
        let col = self.thresholds.iter().position(|&t| t == threshold)?;
        self.rows.iter().find(|r| r.class == class).map(|r| r.values[col])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub tables: Vec<ReportTable>,
}

impl EvalReport {
    pub fn table(&self, key: &str) -> Option<&ReportTable> {
        self.tables.iter().find(|t| t.key == key)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tables.iter().flat_map(|t| t.rows.iter().flat_map(|r| r.values.iter().copied()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples: {}", self.samples);
        for t in &self.tables {
            let _ = writeln!(out, "\n{}", t.title);
            let _ = write!(out, "{:<10}", "class");
            for th in &t.thresholds {
                let _ = write!(out, " {:>10}", format!("{}@{}", t.metric, th));
            }
            out.push('\n');
            for r in &t.rows {
                let _ = write!(out, "{:<10}", r.class);
                for v in &r.values {
                    let _ = write!(out, " {v:>10.2}");
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Scores predictions against a split. Samples without predictions count as misses.
/// 3D tables are produced only when every prediction carries depth.
pub fn evaluate_dataset(
    predictions: &[SamplePredictions],
    ground_truth: &[GroundTruthSample],
    mode: Execution,
) -> Result<EvalReport, MetricsError> {
    let known: BTreeSet<&str> = ground_truth.iter().map(|g| g.sample_id.as_str()).collect();
    let unknown: Vec<String> = predictions
        .iter()
        .filter(|p| !known.contains(p.sample_id.as_str()))
        .map(|p| p.sample_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(MetricsError::UnknownSamples(unknown));
    }
    let mut by_id: BTreeMap<&str, &SamplePredictions> = BTreeMap::new();
    for p in predictions {
        p.check()?;
        if by_id.insert(p.sample_id.as_str(), p).is_some() {
            return Err(MetricsError::DuplicateSample(p.sample_id.clone()));
        }
    }
    let with_3d = predictions.iter().all(SamplePredictions::has_depth);
    if !with_3d {
        log::info!("predictions without depth: 3D tables skipped");
    }

    let empty = |id: &str| SamplePredictions { sample_id: id.to_string(), junctions: Vec::new(), lines: Vec::new() };
    let per_sample = exec::map(mode, ground_truth, |gt| -> Result<Vec<PrCurve>, MetricsError> {
        let g = prepare_ground_truth(gt)?;
        let owned;
        let p = match by_id.get(gt.sample_id.as_str()) {
            Some(p) => *p,
            None => {
                owned = empty(&gt.sample_id);
                &owned
            }
        };
        let p = prepare_predictions(p, gt, with_3d)?;
        Ok(sample_curves(&p, &g, with_3d))
    });

    let cell_list = cells(with_3d);
    let mut pooled = vec![PrCurve::default(); cell_list.len()];
    for curves in per_sample {
        for (acc, c) in pooled.iter_mut().zip(curves?) {
            acc.merge(c);
        }
    }

    let mut tables: Vec<ReportTable> = Vec::new();
    for ((t, row, _), curve) in cell_list.into_iter().zip(&pooled) {
        if tables.last().is_none_or(|last| last.key != t.key) {
            tables.push(ReportTable {
                key: t.key.to_string(),
                title: t.title.to_string(),
                metric: t.metric.to_string(),
                thresholds: t.thresholds.to_vec(),
                rows: Vec::new(),
            });
        }
        let table = tables.last_mut().expect("table pushed");
        if table.rows.last().is_none_or(|r| r.class != row) {
            table.rows.push(ReportRow { class: row.to_string(), values: Vec::new() });
        }
        table.rows.last_mut().expect("row pushed").values.push(curve.average_precision());
    }
    Ok(EvalReport { samples: ground_truth.len(), tables })
}

/// Ground truth rewritten as predictions with full confidence and depth.
pub fn gt_as_predictions(ground_truth: &[GroundTruthSample]) -> Vec<SamplePredictions> {
    ground_truth
        .iter()
        .map(|gt| {
            let g = &gt.wireframe;
            let px = g.junctions2d.clone().unwrap_or_default();
            let point = |i: usize| vec![px[i][0], px[i][1], g.junctions3d[i].z];
            SamplePredictions {
                sample_id: gt.sample_id.clone(),
                junctions: (0..px.len())
                    .map(|i| PredictedJunction {
                        x: px[i][0],
                        y: px[i][1],
                        z: Some(g.junctions3d[i].z),
                        score: 1.0,
                        class: g.junction_class[i],
                    })
                    .collect(),
                lines: g
                    .lines
                    .iter()
                    .zip(&g.line_visibility)
                    .filter(|_| !px.is_empty())
                    .map(|(&(a, b), &class)| PredictedLine { p1: point(a), p2: point(b), score: 1.0, class })
                    .collect(),
            }
        })
        .collect()
}

/// Adds Gaussian pixel noise to every x/y coordinate and draws uniform scores.
pub fn perturb_predictions(predictions: &[SamplePredictions], sigma_px: f64, seed: u64) -> Vec<SamplePredictions> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma_px.max(0.0)).expect("finite sigma");
    predictions
        .iter()
        .map(|p| {
            let mut p = p.clone();
            for j in &mut p.junctions {
                j.x += normal.sample(&mut rng);
                j.y += normal.sample(&mut rng);
                j.score = rng.gen_range(0.05..1.0);
            }
            for l in &mut p.lines {
                for end in [&mut l.p1, &mut l.p2] {
                    end[0] += normal.sample(&mut rng);
                    end[1] += normal.sample(&mut rng);
                }
                l.score = rng.gen_range(0.05..1.0);
            }
            p
        })
        .collect()
}
