//! Pinhole camera: projection, depth lifting and rigid world-to-camera poses.
//!
//! Camera frame convention: +Z forward, +X right, +Y down, so a point in front
//! of the camera has `Z > 0` and image coordinates grow right/down.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{determinant, mat_mul, mat_vec, transpose, Mat3, Vec3, IDENTITY3};
use crate::wireframe::WireframeGraph;

/// Points with `Z` at or below this are treated as behind the camera.
pub const DEFAULT_NEAR_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CameraError {
    #[error("point is behind the camera (Z = {z})")]
    BehindCamera { z: f64 },
    #[error("invalid depth {0}; depth must be positive")]
    InvalidDepth(f64),
    #[error("degenerate viewing direction: {0}")]
    Degenerate(&'static str),
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("rotation is not orthonormal with determinant +1")]
    InvalidRotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    /// 256x256 image with a 45 degree vertical field of view.
    fn default() -> Self {
        Self::from_fov(256, 256, 45.0)
    }
}

impl CameraIntrinsics {
    pub fn from_fov(width: u32, height: u32, vertical_fov_deg: f64) -> Self {
        let f = (height as f64 / 2.0) / (vertical_fov_deg.to_radians() / 2.0).tan();
        Self {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.fx.is_finite()
            && self.fy.is_finite()
            && self.cx > 0.0
            && self.cx < self.width as f64
            && self.cy > 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(CameraError::InvalidIntrinsics(format!("{self:?}")))
        }
    }

    pub fn contains(&self, pixel: [f64; 2]) -> bool {
        pixel[0] >= 0.0 && pixel[1] >= 0.0 && pixel[0] <= self.width as f64 && pixel[1] <= self.height as f64
    }
}

/// `x = fx·X/Z + cx`, `y = fy·Y/Z + cy`.
pub fn project(point: Vec3, k: &CameraIntrinsics) -> Result<[f64; 2], CameraError> {
    project_with_eps(point, k, DEFAULT_NEAR_EPS)
}

pub fn project_with_eps(point: Vec3, k: &CameraIntrinsics, eps: f64) -> Result<[f64; 2], CameraError> {
    if !(point.z > eps) {
        return Err(CameraError::BehindCamera { z: point.z });
    }
    Ok([k.fx * point.x / point.z + k.cx, k.fy * point.y / point.z + k.cy])
}

/// Inverse of [`project`] given the camera-frame depth `Z`.
pub fn lift(x: f64, y: f64, z: f64, k: &CameraIntrinsics) -> Result<Vec3, CameraError> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(CameraError::InvalidDepth(z));
    }
    Ok(Vec3::new(z * (x - k.cx) / k.fx, z * (y - k.cy) / k.fy, z))
}

/// Rigid transform taking world points into the camera frame: `R·X + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for CameraPose {
    fn default() -> Self {
        Self::identity()
    }
}

impl CameraPose {
    pub fn identity() -> Self {
        Self {
            rotation: IDENTITY3,
            translation: Vec3::ZERO,
        }
    }

    pub fn new(rotation: Mat3, translation: Vec3) -> Result<Self, CameraError> {
        let pose = Self { rotation, translation };
        pose.check_rotation(1e-9)?;
        Ok(pose)
    }

    pub fn translation(t: Vec3) -> Self {
        Self {
            rotation: IDENTITY3,
            translation: t,
        }
    }

    pub fn check_rotation(&self, tol: f64) -> Result<(), CameraError> {
        let rrt = mat_mul(&self.rotation, &transpose(&self.rotation));
        let orthonormal = (0..3).all(|i| (0..3).all(|j| (rrt[i][j] - IDENTITY3[i][j]).abs() <= tol));
        if orthonormal && (determinant(&self.rotation) - 1.0).abs() <= tol {
            Ok(())
        } else {
            Err(CameraError::InvalidRotation)
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        mat_vec(&self.rotation, p) + self.translation
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &CameraPose) -> CameraPose {
        CameraPose {
            rotation: mat_mul(&self.rotation, &first.rotation),
            translation: mat_vec(&self.rotation, first.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> CameraPose {
        let rt = transpose(&self.rotation);
        CameraPose {
            rotation: rt,
            translation: -mat_vec(&rt, self.translation),
        }
    }

    /// Camera center in world coordinates.
    pub fn eye(&self) -> Vec3 {
        self.inverse().translation
    }

    /// Viewing direction (+Z of the camera) in world coordinates.
    pub fn forward(&self) -> Vec3 {
        Vec3::from(self.rotation[2])
    }
}

/// Pose looking from `eye` toward `target`. Image "down" (+Y) is opposite `up`.
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Result<CameraPose, CameraError> {
    let z = (target - eye).normalized().ok_or(CameraError::Degenerate("eye coincides with target"))?;
    let down = -up;
    let y_raw = down - z * down.dot(z);
    if y_raw.norm() < 1e-9 * up.norm().max(1e-300) {
        return Err(CameraError::Degenerate("up vector parallel to view direction"));
    }
    let y = y_raw.normalized().ok_or(CameraError::Degenerate("zero up vector"))?;
    let x = y.cross(z);
    let rotation = [x.to_array(), y.to_array(), z.to_array()];
    let translation = -mat_vec(&rotation, eye);
    Ok(CameraPose { rotation, translation })
}

/// Maps every junction by the pose; line set and labels are unchanged.
/// Any stored 2D projection is dropped since it no longer matches.
pub fn transform_graph(graph: &WireframeGraph, pose: &CameraPose) -> WireframeGraph {
    WireframeGraph {
        junctions3d: graph.junctions3d.iter().map(|&p| pose.apply(p)).collect(),
        junctions2d: None,
        ..graph.clone()
    }
}
