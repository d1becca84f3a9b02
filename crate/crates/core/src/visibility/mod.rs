//! Junction occlusion against the solid's own surface, plus image rendering.
//!
//! Visibility labels come from exact ray casting in the camera frame, never
//! from the rasterized depth buffer, so they do not depend on resolution.

pub mod bvh;
pub mod mesh;
pub mod raster;
pub mod raycast;

use thiserror::Error;

use crate::exec::{self, Execution};
use crate::geom::Vec3;
use crate::wireframe::WireframeGraph;

pub use bvh::{build_bvh, BvhAccelerator, BvhNode};
pub use mesh::TriangleMesh;
pub use raster::{rasterize, rasterize_with, DepthBuffer, RenderOutput, ShadingOptions};
pub use raycast::{ray_occlusion_test, NaiveCaster, OcclusionEps, OcclusionQuery};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VisibilityError {
    #[error("ray toward the camera center is degenerate")]
    DegenerateRay,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
}

/// Per-junction visibility flags with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityLabels {
    pub flags: Vec<bool>,
    /// Junctions farther than `10·eps_self` from the surface.
    pub off_surface: Vec<usize>,
}

/// `v = 1` unless the segment from the camera to the junction is blocked.
pub fn label_junction_visibility<Q: OcclusionQuery + ?Sized>(
    graph_camera: &WireframeGraph,
    query: &Q,
    mesh_camera: &TriangleMesh,
    eps: OcclusionEps,
) -> Result<VisibilityLabels, VisibilityError> {
    label_points(&graph_camera.junctions3d, query, mesh_camera, eps, Execution::Sequential)
}

/// Batch form of [`label_junction_visibility`] over arbitrary points.
pub fn label_points<Q: OcclusionQuery + ?Sized>(
    points: &[Vec3],
    query: &Q,
    mesh_camera: &TriangleMesh,
    eps: OcclusionEps,
    mode: Execution,
) -> Result<VisibilityLabels, VisibilityError> {
    let occluded = exec::map(mode, points, |&p| query.occluded(p, eps));
    let flags = occluded
        .into_iter()
        .map(|r| r.map(|o| !o))
        .collect::<Result<Vec<_>, _>>()?;
    let limit = 10.0 * eps.eps_self;
    let off_surface: Vec<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, &p)| mesh_camera.distance_to(p) > limit)
        .map(|(i, _)| i)
        .collect();
    if !off_surface.is_empty() {
        log::warn!(
            "inconsistent geometry: {} junction(s) lie more than {limit:.3e} from the mesh surface",
            off_surface.len()
        );
    }
    Ok(VisibilityLabels { flags, off_surface })
}
