use crate::geom::Vec3;

use super::mesh::TriangleMesh;
use super::VisibilityError;

/// `|det|` below this is a grazing ray and counts as a miss.
pub const DET_EPS: f64 = 1e-12;
/// Hits closer than this ray parameter to the camera are ignored.
pub const DEFAULT_EPS_T: f64 = 1e-6;
/// Self-exclusion radius relative to the mesh bounding-box diagonal.
pub const EPS_SELF_RELATIVE: f64 = 1e-4;

/// Möller–Trumbore intersection, inclusive edges. Returns the ray parameter.
#[inline]
pub fn intersect_triangle(origin: Vec3, dir: Vec3, [a, b, c]: [Vec3; 3]) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < DET_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = dir.dot(qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(qvec) * inv)
}

/// Open segment from the camera center (origin) to a point, parameterized by `t ∈ (t_min, t_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionRay {
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl OcclusionRay {
    /// Segment toward `point`, excluding the final `eps_self` length units.
    pub fn toward(point: Vec3, eps_self: f64, eps_t: f64) -> Result<Self, VisibilityError> {
        let len = point.norm();
        if !(len > 0.0) || !point.is_finite() {
            return Err(VisibilityError::DegenerateRay);
        }
        Ok(Self {
            dir: point,
            t_min: eps_t,
            t_max: 1.0 - eps_self / len,
        })
    }

    #[inline]
    pub fn blocked_by(&self, tri: [Vec3; 3]) -> bool {
        matches!(intersect_triangle(Vec3::ZERO, self.dir, tri), Some(t) if t > self.t_min && t < self.t_max)
    }
}

/// Tolerances for occlusion queries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionEps {
    pub eps_self: f64,
    pub eps_t: f64,
}

impl OcclusionEps {
    pub fn for_mesh(mesh: &TriangleMesh) -> Self {
        Self {
            eps_self: EPS_SELF_RELATIVE * mesh.bounds().diagonal(),
            eps_t: DEFAULT_EPS_T,
        }
    }
}

/// Anything that can answer "is the segment from the camera to this point blocked?".
pub trait OcclusionQuery: Sync {
    fn occluded(&self, point: Vec3, eps: OcclusionEps) -> Result<bool, VisibilityError>;
}

/// Reference implementation testing every triangle.
#[derive(Debug, Clone, Copy)]
pub struct NaiveCaster<'a> {
    pub mesh: &'a TriangleMesh,
}

impl<'a> NaiveCaster<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        Self { mesh }
    }
}

impl OcclusionQuery for NaiveCaster<'_> {
    fn occluded(&self, point: Vec3, eps: OcclusionEps) -> Result<bool, VisibilityError> {
        ray_occlusion_test(point, self.mesh, eps)
    }
}

/// Brute-force occlusion test: the camera-frame mesh is checked triangle by triangle.
pub fn ray_occlusion_test(point: Vec3, mesh: &TriangleMesh, eps: OcclusionEps) -> Result<bool, VisibilityError> {
    let ray = OcclusionRay::toward(point, eps.eps_self, eps.eps_t)?;
    Ok((0..mesh.triangles.len()).any(|i| ray.blocked_by(mesh.triangle(i))))
}
