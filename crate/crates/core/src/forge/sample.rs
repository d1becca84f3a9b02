//! Assembling one labeled sample from a solid and a viewpoint.

use std::fmt;
use std::io::Cursor;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::camera::{project, transform_graph, CameraIntrinsics, CameraPose};
use crate::visibility::{build_bvh, label_junction_visibility, rasterize_with, OcclusionEps, ShadingOptions, TriangleMesh};
use crate::exec::Execution;
use crate::wireframe::{validate, JunctionClass, WireframeGraph};

use super::views::is_axis_grazing;
use super::ForgeError;

/// One solid ready for rendering: world-frame mesh and wireframe.
#[derive(Debug, Clone)]
pub struct SolidModel {
    pub id: u64,
    pub mesh: TriangleMesh,
    pub wireframe: WireframeGraph,
}

impl SolidModel {
    /// Radius of the bounding sphere centered at the origin.
    pub fn bounding_radius(&self) -> f64 {
        self.mesh.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub min_visible_junctions: usize,
    /// Distinct junctions projecting closer than this (pixels) reject the view.
    pub min_junction_separation_px: f64,
    pub min_axis_angle_deg: f64,
    /// Rasterize the image (labels are computed either way).
    pub render: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            min_visible_junctions: 5,
            min_junction_separation_px: 2.0,
            min_axis_angle_deg: 5.0,
            render: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RejectReason {
    /// A face family is seen edge-on; silhouette junctions would be ambiguous.
    Degenerate,
    OutOfFrame { junction: usize },
    TooFewVisible { visible: usize, required: usize },
    CrowdedJunctions { first: usize, second: usize, distance_px: f64 },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Degenerate => write!(f, "degenerate axis-aligned view"),
            RejectReason::OutOfFrame { junction } => write!(f, "junction {junction} projects outside the image"),
            RejectReason::TooFewVisible { visible, required } => {
                write!(f, "{visible} visible junctions, {required} required")
            }
            RejectReason::CrowdedJunctions { first, second, distance_px } => {
                write!(f, "junctions {first} and {second} project {distance_px:.3} px apart")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSample {
    pub sample_id: String,
    pub solid_id: u64,
    pub view_id: u32,
    /// PNG-encoded render; empty when rendering was disabled.
    pub image_png: Vec<u8>,
    /// Camera-frame wireframe with labels and 2D projections.
    pub wireframe: WireframeGraph,
    pub intrinsics: CameraIntrinsics,
}

impl DataSample {
    pub fn observable_junctions(&self) -> usize {
        self.wireframe.junction_visibility.iter().filter(|&&v| v).count()
    }
}

pub fn sample_id(solid_id: u64, view_id: u32) -> String {
    format!("s{solid_id:05}_v{view_id:02}")
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, ForgeError> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| ForgeError::Image(e.to_string()))?;
    Ok(buf.into_inner())
}

/// Labels and renders the solid from `pose`, or says why the view is unusable.
pub fn make_sample(
    solid: &SolidModel,
    pose: &CameraPose,
    view_id: u32,
    k: &CameraIntrinsics,
    config: &SampleConfig,
) -> Result<DataSample, ForgeError> {
    let reject = |r| Err(ForgeError::RejectedView(r));
    if is_axis_grazing(pose.forward(), config.min_axis_angle_deg) {
        return reject(RejectReason::Degenerate);
    }
    let mut graph = transform_graph(&solid.wireframe, pose);
    let mesh = solid.mesh.transformed(pose);

    let mut pixels = Vec::with_capacity(graph.junction_count());
    for (junction, &p) in graph.junctions3d.iter().enumerate() {
        let px = match project(p, k) {
            Ok(px) if k.contains(px) => px,
            _ => return reject(RejectReason::OutOfFrame { junction }),
        };
        pixels.push(px);
    }

    let eps = OcclusionEps::for_mesh(&mesh);
    let bvh = build_bvh(&mesh);
    let labels = label_junction_visibility(&graph, &bvh, &mesh, eps)?;
    graph.relabel(labels.flags)?;
    graph.junctions2d = Some(pixels.clone());

    let visible = graph.junction_visibility.iter().filter(|&&v| v).count();
    if visible < config.min_visible_junctions {
        return reject(RejectReason::TooFewVisible {
            visible,
            required: config.min_visible_junctions,
        });
    }
    for i in 0..pixels.len() {
        for j in i + 1..pixels.len() {
            let d = ((pixels[i][0] - pixels[j][0]).powi(2) + (pixels[i][1] - pixels[j][1]).powi(2)).sqrt();
            if d < config.min_junction_separation_px {
                return reject(RejectReason::CrowdedJunctions { first: i, second: j, distance_px: d });
            }
        }
    }

    let image_png = if config.render {
        let out = rasterize_with(&mesh, k, &ShadingOptions::default(), Execution::Sequential);
        encode_png(&out.image)?
    } else {
        Vec::new()
    };

    let sample = DataSample {
        sample_id: sample_id(solid.id, view_id),
        solid_id: solid.id,
        view_id,
        image_png,
        wireframe: graph,
        intrinsics: *k,
    };
    validate(&sample.wireframe).map_err(|violations| ForgeError::InvalidSample {
        sample: sample.sample_id.clone(),
        violations,
    })?;
    debug_assert_eq!(
        JunctionClass::ALL.iter().map(|&c| sample.wireframe.count_class(c)).sum::<usize>(),
        sample.wireframe.junction_count()
    );
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::look_at;
    use crate::forge::voxel::VoxelSolid;
    use crate::geom::Vec3;
    use crate::wireframe::LineVisibility;

    fn cube() -> SolidModel {
        let s = VoxelSolid::from_cells(&[[0, 0, 0]]).unwrap();
        SolidModel { id: 0, mesh: s.boundary_mesh(), wireframe: s.wireframe() }
    }

    #[test]
    fn generic_cube_view() {
        let pose = look_at(Vec3::new(2.1, 1.3, -2.7), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let s = make_sample(&cube(), &pose, 0, &CameraIntrinsics::default(), &SampleConfig::default()).unwrap();
        let wf = &s.wireframe;
        assert_eq!(wf.count_class(JunctionClass::Hidden), 1);
        assert_eq!(wf.count_lines(LineVisibility::Hidden), 3);
        assert_eq!(wf.count_class(JunctionClass::Fleeting), 3);
        assert_eq!(wf.count_class(JunctionClass::Visible), 4);
        let decoded = image::load_from_memory(&s.image_png).unwrap();
        assert_eq!((decoded.width(), decoded.height()), (256, 256));
        assert_eq!(s.sample_id, "s00000_v00");
    }

    #[test]
    fn face_on_cube_is_rejected() {
        let pose = look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let err = make_sample(&cube(), &pose, 0, &CameraIntrinsics::default(), &SampleConfig::default()).unwrap_err();
        assert!(matches!(err, ForgeError::RejectedView(RejectReason::Degenerate)));
    }

    #[test]
    fn out_of_frame_is_rejected() {
        let pose = look_at(Vec3::new(0.4, 0.3, -0.9), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let err = make_sample(&cube(), &pose, 0, &CameraIntrinsics::default(), &SampleConfig::default()).unwrap_err();
        assert!(matches!(err, ForgeError::RejectedView(RejectReason::OutOfFrame { .. })));
    }

    #[test]
    fn too_few_visible_is_rejected() {
        let pose = look_at(Vec3::new(2.1, 1.3, -2.7), Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let cfg = SampleConfig { min_visible_junctions: 8, ..SampleConfig::default() };
        let err = make_sample(&cube(), &pose, 0, &CameraIntrinsics::default(), &cfg).unwrap_err();
        assert!(matches!(err, ForgeError::RejectedView(RejectReason::TooFewVisible { visible: 7, required: 8 })));
    }

    #[test]
    fn crowded_projection_is_rejected() {
        let pose = look_at(Vec3::new(2.1, 1.3, -2.7) * 30.0, Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)).unwrap();
        let err = make_sample(&cube(), &pose, 0, &CameraIntrinsics::default(), &SampleConfig::default()).unwrap_err();
        assert!(matches!(err, ForgeError::RejectedView(RejectReason::CrowdedJunctions { .. })));
    }
}
