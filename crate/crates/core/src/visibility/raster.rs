//! Z-buffer software rasterizer producing the shaded sample images and depth maps.
//!
//! Pixel `(i, j)` samples the ray through its center `(i + 0.5, j + 0.5)`.
//! Depth is interpolated as `1/Z`, which is affine in screen space for planar
//! triangles, so the stored value is the exact camera-frame `Z` of the surface
//! along the pixel ray (up to rounding).

use std::io::{self, Read, Write};

use image::{Rgb, RgbImage};

use crate::camera::CameraIntrinsics;
use crate::exec::{self, Execution};
use crate::geom::Vec3;

use super::mesh::TriangleMesh;

pub const DEPTH_MAGIC: &[u8; 4] = b"HOWD";
pub const NEAR_PLANE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingOptions {
    /// Direction toward the light, camera frame (normalized on use).
    pub light_dir: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    pub albedo: [f64; 3],
    pub background: [u8; 3],
}

impl Default for ShadingOptions {
    fn default() -> Self {
        Self {
            light_dir: Vec3::new(1.0, 1.0, -1.0),
            ambient: 0.25,
            diffuse: 0.75,
            albedo: [0.8, 0.8, 0.8],
            background: [255, 255, 255],
        }
    }
}

/// Per-pixel nearest surface depth; `+inf` where nothing was drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthBuffer {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f32>,
}

impl DepthBuffer {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            depth: vec![f32::INFINITY; (width * height) as usize],
        }
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.depth[(y * self.width + x) as usize]
    }

    pub fn covered(&self) -> usize {
        self.depth.iter().filter(|d| d.is_finite()).count()
    }

    /// 16-byte header (`HOWD`, width, height, reserved zero; all u32 little-endian)
    /// followed by row-major little-endian `f32` depths.
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(DEPTH_MAGIC)?;
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&self.height.to_le_bytes())?;
        w.write_all(&0u32.to_le_bytes())?;
        for d in &self.depth {
            w.write_all(&d.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> io::Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)?;
        if &header[0..4] != DEPTH_MAGIC {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad depth magic"));
        }
        let width = u32::from_le_bytes(header[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let mut depth = Vec::with_capacity((width * height) as usize);
        let mut buf = [0u8; 4];
        for _ in 0..(width as usize * height as usize) {
            r.read_exact(&mut buf)?;
            depth.push(f32::from_le_bytes(buf));
        }
        Ok(Self { width, height, depth })
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub image: RgbImage,
    pub depth: DepthBuffer,
    /// Triangles that were entirely behind the near plane.
    pub culled_triangles: usize,
}

/// Screen-space triangle ready for scan conversion.
#[derive(Debug, Clone, Copy)]
struct ScreenTri {
    p: [[f64; 2]; 3],
    inv_z: [f64; 3],
    color: [u8; 3],
    y_min: f64,
    y_max: f64,
}

pub fn rasterize(mesh: &TriangleMesh, k: &CameraIntrinsics, shading: &ShadingOptions) -> RenderOutput {
    rasterize_with(mesh, k, shading, Execution::default())
}

pub fn rasterize_with(
    mesh: &TriangleMesh,
    k: &CameraIntrinsics,
    shading: &ShadingOptions,
    mode: Execution,
) -> RenderOutput {
    let (w, h) = (k.width, k.height);
    let light = shading.light_dir.normalized().unwrap_or(Vec3::new(0.0, 0.0, -1.0));
    let mut tris = Vec::with_capacity(mesh.triangles.len());
    let mut culled = 0;
    for i in 0..mesh.triangles.len() {
        let verts = mesh.triangle(i);
        let clipped = clip_near(&verts);
        if clipped.is_empty() {
            culled += 1;
            continue;
        }
        // Two-sided: shade with the normal facing the camera.
        let mut n = mesh.normal(i);
        let centroid = (verts[0] + verts[1] + verts[2]) / 3.0;
        if n.dot(centroid) > 0.0 {
            n = -n;
        }
        let intensity = shading.ambient + shading.diffuse * n.dot(light).max(0.0);
        let color = shading.albedo.map(|a| (a * intensity * 255.0).round().clamp(0.0, 255.0) as u8);
        for fan in 1..clipped.len().saturating_sub(1) {
            let poly = [clipped[0], clipped[fan], clipped[fan + 1]];
            let p = poly.map(|v| [k.fx * v.x / v.z + k.cx, k.fy * v.y / v.z + k.cy]);
            let inv_z = poly.map(|v| 1.0 / v.z);
            let y_min = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
            let y_max = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max);
            tris.push(ScreenTri { p, inv_z, color, y_min, y_max });
        }
    }
    if tris.is_empty() && !mesh.is_empty() {
        log::warn!("render is empty: all {} triangles are behind the camera", mesh.triangles.len());
    }

    let row_len = w as usize;
    let mut depth = vec![f32::INFINITY; row_len * h as usize];
    let mut color = vec![shading.background; row_len * h as usize];
    let mut rows: Vec<(&mut [f32], &mut [[u8; 3]])> =
        depth.chunks_mut(row_len.max(1)).zip(color.chunks_mut(row_len.max(1))).collect();
    exec::for_each_chunk_mut(mode, &mut rows, 1, |y, row| {
        let (drow, crow) = &mut row[0];
        raster_row(y as u32, w, &tris, drow, crow);
    });
    drop(rows);

    let mut image = RgbImage::new(w, h);
    for (i, px) in image.pixels_mut().enumerate() {
        *px = Rgb(color[i]);
    }
    RenderOutput {
        image,
        depth: DepthBuffer { width: w, height: h, depth },
        culled_triangles: culled,
    }
}

fn raster_row(y: u32, width: u32, tris: &[ScreenTri], depth: &mut [f32], color: &mut [[u8; 3]]) {
    let py = y as f64 + 0.5;
    // Full-precision depth for the comparison, stored as f32.
    let mut best = vec![f64::INFINITY; width as usize];
    for t in tris {
        if py < t.y_min || py > t.y_max {
            continue;
        }
        let [a, b, c] = t.p;
        let area = edge(a, b, c);
        if area.abs() < 1e-14 {
            continue;
        }
        // x-range where this scanline crosses the triangle.
        let mut x_lo = f64::INFINITY;
        let mut x_hi = f64::NEG_INFINITY;
        for (u, v) in [(a, b), (b, c), (c, a)] {
            if (u[1] - py) * (v[1] - py) <= 0.0 {
                if (v[1] - u[1]).abs() < 1e-300 {
                    x_lo = x_lo.min(u[0].min(v[0]));
                    x_hi = x_hi.max(u[0].max(v[0]));
                } else {
                    let s = (py - u[1]) / (v[1] - u[1]);
                    let x = u[0] + s * (v[0] - u[0]);
                    x_lo = x_lo.min(x);
                    x_hi = x_hi.max(x);
                }
            }
        }
        if x_lo > x_hi {
            continue;
        }
        let start = ((x_lo - 0.5).floor().max(0.0)) as i64;
        let end = ((x_hi - 0.5).ceil()).min(width as f64 - 1.0) as i64;
        for x in start..=end {
            let p = [x as f64 + 0.5, py];
            let w0 = edge(b, c, p) / area;
            let w1 = edge(c, a, p) / area;
            let w2 = edge(a, b, p) / area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let inv_z = w0 * t.inv_z[0] + w1 * t.inv_z[1] + w2 * t.inv_z[2];
            if inv_z <= 0.0 {
                continue;
            }
            let z = 1.0 / inv_z;
            let xi = x as usize;
            if z < best[xi] {
                best[xi] = z;
                depth[xi] = z as f32;
                color[xi] = t.color;
            }
        }
    }
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Clips a triangle against `Z >= NEAR_PLANE`, returning a convex polygon.
fn clip_near(tri: &[Vec3; 3]) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let cur = tri[i];
        let next = tri[(i + 1) % 3];
        let cur_in = cur.z >= NEAR_PLANE;
        let next_in = next.z >= NEAR_PLANE;
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let s = (NEAR_PLANE - cur.z) / (next.z - cur.z);
            out.push(cur + (next - cur) * s);
        }
    }
    out
}
