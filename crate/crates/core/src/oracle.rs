//! Equivalence sweeps: accelerated occlusion against naive ray casting, and
//! Hungarian assignment against exhaustive search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::transform_graph;
use crate::exec::{self, Execution};
use crate::forge::pipeline::{generate_solids, GenerateConfig};
use crate::forge::views::{framing_radius_range, sample_viewpoints, ViewSampling};
use crate::geom::Vec3;
use crate::matching::{brute_force_matching, hungarian};
use crate::visibility::{build_bvh, NaiveCaster, OcclusionEps, OcclusionQuery, TriangleMesh, VisibilityError};

/// Mismatches kept in a report for dumping; the count covers all of them.
pub const MAX_REPORTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityMismatch {
    pub solid: u64,
    pub view: usize,
    pub junction: usize,
    pub point: Vec3,
    pub naive: bool,
    pub accelerated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VisibilityOracleReport {
    pub solids: usize,
    pub views: usize,
    pub queries: usize,
    pub mismatch_count: usize,
    pub mismatches: Vec<VisibilityMismatch>,
}

impl VisibilityOracleReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0
    }
}

/// Query that reports every point as visible; stands in for a broken accelerator.
pub struct NeverOccluded;

impl OcclusionQuery for NeverOccluded {
    fn occluded(&self, _point: Vec3, _eps: OcclusionEps) -> Result<bool, VisibilityError> {
        Ok(false)
    }
}

/// Labels every junction of every (solid, view) both ways and compares.
pub fn visibility_sweep(config: &GenerateConfig, mode: Execution) -> Result<VisibilityOracleReport, VisibilityError> {
    visibility_sweep_with(config, mode, |mesh| Box::new(build_bvh(mesh)))
}

/// As [`visibility_sweep`], with the accelerated query built by `accelerated`.
pub fn visibility_sweep_with<F>(
    config: &GenerateConfig,
    mode: Execution,
    accelerated: F,
) -> Result<VisibilityOracleReport, VisibilityError>
where
    F: for<'m> Fn(&'m TriangleMesh) -> Box<dyn OcclusionQuery + 'm> + Sync,
{
    let solids = generate_solids(config).map_err(|e| VisibilityError::InvalidMesh(e.to_string()))?;
    let sampling = ViewSampling { count: config.views, ..ViewSampling::default() };
    let per_solid = exec::map(mode, &solids, |(solid, solid_seed)| {
        let range = framing_radius_range(solid.bounding_radius(), &config.intrinsics, config.framing);
        let poses = sample_viewpoints(*solid_seed, range, Vec3::ZERO, &sampling);
        let mut report = VisibilityOracleReport { solids: 1, views: poses.len(), ..Default::default() };
        for (view, pose) in poses.iter().enumerate() {
            let mesh = solid.mesh.transformed(pose);
            let graph = transform_graph(&solid.wireframe, pose);
            let eps = OcclusionEps::for_mesh(&mesh);
            let naive = NaiveCaster::new(&mesh);
            let fast = accelerated(&mesh);
            for (junction, &point) in graph.junctions3d.iter().enumerate() {
                let a = naive.occluded(point, eps)?;
                let b = fast.occluded(point, eps)?;
                report.queries += 1;
                if a != b {
                    report.mismatch_count += 1;
                    if report.mismatches.len() < MAX_REPORTED {
                        report.mismatches.push(VisibilityMismatch {
                            solid: solid.id,
                            view,
                            junction,
                            point,
                            naive: a,
                            accelerated: b,
                        });
                    }
                }
            }
        }
        Ok(report)
    });
    let mut total = VisibilityOracleReport::default();
    for r in per_solid {
        let r = r?;
        total.solids += r.solids;
        total.views += r.views;
        total.queries += r.queries;
        total.mismatch_count += r.mismatch_count;
        total.mismatches.extend(r.mismatches);
    }
    total.mismatches.truncate(MAX_REPORTED);
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingMismatch {
    pub instance: usize,
    pub matrix: Vec<Vec<f64>>,
    pub hungarian: f64,
    pub brute_force: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchingOracleReport {
    pub instances: usize,
    pub mismatch_count: usize,
    pub mismatches: Vec<MatchingMismatch>,
}

impl MatchingOracleReport {
    pub fn passed(&self) -> bool {
        self.mismatch_count == 0
    }
}

/// Random R×C matrix with R ≤ C ≤ `max_dim`, entries uniform in [0, 10).
pub fn random_cost_matrix(rng: &mut impl Rng, max_dim: usize) -> Vec<Vec<f64>> {
    let a = rng.gen_range(1..=max_dim);
    let b = rng.gen_range(1..=max_dim);
    let (rows, cols) = (a.min(b), a.max(b));
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0.0..10.0)).collect()).collect()
}

/// Compares optimal costs on `instances` random matrices; equality is exact.
pub fn matching_sweep(instances: usize, max_dim: usize, seed: u64, mode: Execution) -> MatchingOracleReport {
    let results = exec::map_range(mode, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let m = random_cost_matrix(&mut rng, max_dim);
        let h = hungarian(&m).expect("finite matrix").cost;
        let b = brute_force_matching(&m).expect("small matrix").cost;
        (h != b).then_some(MatchingMismatch { instance: i, matrix: m, hungarian: h, brute_force: b })
    });
    let mismatches: Vec<_> = results.into_iter().flatten().collect();
    MatchingOracleReport {
        instances,
        mismatch_count: mismatches.len(),
        mismatches: mismatches.into_iter().take(MAX_REPORTED).collect(),
    }
}

/// `count` random axis boxes in front of the camera (12 triangles each), plus their corners
/// as query points.
pub fn random_box_field(count: usize, seed: u64) -> (TriangleMesh, Vec<Vec3>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mesh = TriangleMesh::default();
    let mut corners = Vec::with_capacity(count * 8);
    for _ in 0..count {
        let c = Vec3::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0), rng.gen_range(4.0..20.0));
        let h = Vec3::new(rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4), rng.gen_range(0.05..0.4));
        let b = TriangleMesh::axis_box(c - h, c + h);
        corners.extend(b.vertices.iter().copied());
        mesh.merge(&b);
    }
    (mesh, corners)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenerateConfig {
        GenerateConfig { seed: 3, solids: 4, views: 6, ..GenerateConfig::default() }
    }

    #[test]
    fn sweeps_pass() {
        let r = visibility_sweep(&small(), Execution::default()).unwrap();
        assert!(r.passed(), "{:?}", r.mismatches);
        assert_eq!(r.solids, 4);
        assert!(r.queries > 0);
        let m = matching_sweep(200, 7, 1, Execution::default());
        assert!(m.passed(), "{:?}", m.mismatches);
    }

    #[test]
    fn broken_accelerator_is_caught() {
        let r = visibility_sweep_with(&small(), Execution::Sequential, |_| Box::new(NeverOccluded)).unwrap();
        assert!(!r.passed());
        assert!(r.mismatches.iter().all(|m| m.naive && !m.accelerated));
    }

    #[test]
    fn sweep_is_mode_independent() {
        let a = matching_sweep(50, 5, 9, Execution::Sequential);
        let b = matching_sweep(50, 5, 9, Execution::Parallel);
        assert_eq!(a, b);
    }

    #[test]
    fn box_field_size() {
        let (mesh, corners) = random_box_field(10, 0);
        assert_eq!(mesh.triangles.len(), 120);
        assert_eq!(corners.len(), 80);
        mesh.validate().unwrap();
    }
}
