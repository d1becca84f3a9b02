//! Random viewpoints on a sphere around the solid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{look_at, CameraIntrinsics, CameraPose};
use crate::geom::Vec3;

/// World up; image "up" follows it.
pub const WORLD_UP: Vec3 = Vec3::new(0.0, 1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewSampling {
    pub count: usize,
    /// Views closer than this to the poles (|sin elevation| above) are resampled.
    pub max_elevation_sin: f64,
    /// Minimum angle between any two view directions.
    pub min_separation_deg: f64,
    /// Minimum angle between the view direction and every axis-aligned face plane.
    pub min_axis_angle_deg: f64,
}

impl Default for ViewSampling {
    fn default() -> Self {
        Self {
            count: 24,
            max_elevation_sin: 0.95,
            min_separation_deg: 5.0,
            min_axis_angle_deg: 5.0,
        }
    }
}

/// True when the viewing direction nearly lies in an axis-aligned plane, so
/// some faces of a rectilinear solid are seen edge-on.
pub fn is_axis_grazing(view_dir: Vec3, min_axis_angle_deg: f64) -> bool {
    let Some(d) = view_dir.normalized() else {
        return true;
    };
    let limit = min_axis_angle_deg.to_radians().sin();
    d.x.abs() < limit || d.y.abs() < limit || d.z.abs() < limit
}

/// Camera distances for which a bounding sphere of `radius` spans
/// `height_fraction.0..=height_fraction.1` of the image height.
pub fn framing_radius_range(radius: f64, k: &CameraIntrinsics, height_fraction: (f64, f64)) -> (f64, f64) {
    let dist = |f: f64| {
        let half_angle = (f * k.height as f64 / (2.0 * k.fy)).atan();
        radius / half_angle.sin()
    };
    (dist(height_fraction.1), dist(height_fraction.0))
}

/// `n` poses with eyes uniformly distributed on the sphere around `target`,
/// distance uniform in `radius_range`; deterministic per seed.
pub fn sample_viewpoints(
    seed: u64,
    radius_range: (f64, f64),
    target: Vec3,
    sampling: &ViewSampling,
) -> Vec<CameraPose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_cos = sampling.min_separation_deg.to_radians().cos();
    let mut dirs: Vec<Vec3> = Vec::with_capacity(sampling.count);
    let mut poses = Vec::with_capacity(sampling.count);
    let (r_lo, r_hi) = if radius_range.0 <= radius_range.1 {
        radius_range
    } else {
        (radius_range.1, radius_range.0)
    };
    while poses.len() < sampling.count {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).sqrt();
        // y is the elevation axis.
        let dir = Vec3::new(s * phi.cos(), z, s * phi.sin());
        let radius = if r_hi > r_lo { rng.gen_range(r_lo..=r_hi) } else { r_lo };
        if dir.y.abs() > sampling.max_elevation_sin
            || is_axis_grazing(dir, sampling.min_axis_angle_deg)
            || dirs.iter().any(|d| d.dot(dir) > min_cos)
        {
            continue;
        }
        let Ok(pose) = look_at(target + dir * radius, target, WORLD_UP) else {
            continue;
        };
        dirs.push(dir);
        poses.push(pose);
    }
    poses
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poses_respect_radius_and_target() {
        let target = Vec3::new(0.1, -0.2, 0.3);
        let poses = sample_viewpoints(11, (2.0, 3.0), target, &ViewSampling::default());
        assert_eq!(poses.len(), 24);
        for p in &poses {
            let r = p.eye().distance(target);
            assert!((2.0 - 1e-9..=3.0 + 1e-9).contains(&r), "radius {r}");
            let t = p.apply(target);
            assert!(t.x.abs() < 1e-9 && t.y.abs() < 1e-9 && t.z > 0.0);
            let dir = (p.eye() - target).normalized().unwrap();
            assert!(dir.y.abs() <= 0.95);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = sample_viewpoints(5, (2.0, 3.0), Vec3::ZERO, &ViewSampling::default());
        let b = sample_viewpoints(5, (2.0, 3.0), Vec3::ZERO, &ViewSampling::default());
        let c = sample_viewpoints(6, (2.0, 3.0), Vec3::ZERO, &ViewSampling::default());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn views_are_separated() {
        for seed in 0..100 {
            let poses = sample_viewpoints(seed, (2.0, 3.0), Vec3::ZERO, &ViewSampling::default());
            let dirs: Vec<_> = poses.iter().map(|p| p.eye().normalized().unwrap()).collect();
            for i in 0..dirs.len() {
                for j in i + 1..dirs.len() {
                    let angle = dirs[i].dot(dirs[j]).clamp(-1.0, 1.0).acos().to_degrees();
                    assert!(angle > 5.0, "seed {seed}: views {i},{j} are {angle:.2} deg apart");
                }
            }
        }
    }

    #[test]
    fn framing_distances() {
        let k = CameraIntrinsics::default();
        let (near, far) = framing_radius_range(1.0, &k, (0.6, 0.85));
        assert!(near < far);
        for (d, f) in [(near, 0.85), (far, 0.6)] {
            let projected = 2.0 * k.fy * (1.0f64 / d).asin().tan() / k.height as f64;
            assert!((projected - f).abs() < 1e-12);
        }
    }

    #[test]
    fn grazing_detection() {
        assert!(is_axis_grazing(Vec3::new(0.0, 0.0, 1.0), 5.0));
        assert!(!is_axis_grazing(Vec3::new(0.5, 0.6, 0.7), 5.0));
    }
}
