//! Wireframe dataset generation with visibility labels, plus matching, loss and evaluation.

pub mod camera;
pub mod exec;
pub mod forge;
pub mod geom;
pub mod matching;
pub mod metrics;
pub mod oracle;
pub mod visibility;
pub mod wireframe;

pub use camera::{lift, look_at, project, CameraError, CameraIntrinsics, CameraPose};
pub use exec::Execution;
pub use geom::{Aabb, Vec3};
pub use wireframe::{JunctionClass, LineVisibility, WireframeError, WireframeGraph};
