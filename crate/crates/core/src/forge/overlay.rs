//! Color-coded wireframe overlay for previewing samples.

use image::{Rgb, RgbImage};

use crate::camera::{project, CameraIntrinsics};
use crate::wireframe::{JunctionClass, LineVisibility, WireframeGraph};

use super::sample::encode_png;
use super::ForgeError;

pub const VISIBLE_LINE: Rgb<u8> = Rgb([0, 0, 128]);
pub const HIDDEN_LINE: Rgb<u8> = Rgb([210, 180, 140]);
pub const VISIBLE_JUNCTION: Rgb<u8> = Rgb([0, 128, 128]);
pub const FLEETING_JUNCTION: Rgb<u8> = Rgb([255, 0, 255]);
pub const HIDDEN_JUNCTION: Rgb<u8> = Rgb([0, 0, 0]);

pub fn junction_color(class: JunctionClass) -> Rgb<u8> {
    match class {
        JunctionClass::Visible => VISIBLE_JUNCTION,
        JunctionClass::Fleeting => FLEETING_JUNCTION,
        JunctionClass::Hidden => HIDDEN_JUNCTION,
    }
}

/// Draws the camera-frame wireframe over `image`. Hidden lines are drawn first.
pub fn draw_wireframe(image: &mut RgbImage, graph: &WireframeGraph, k: &CameraIntrinsics) {
    let pixels: Vec<Option<[f64; 2]>> = match &graph.junctions2d {
        Some(p) => p.iter().copied().map(Some).collect(),
        None => graph.junctions3d.iter().map(|&p| project(p, k).ok()).collect(),
    };
    for pass in [LineVisibility::Hidden, LineVisibility::Visible] {
        for (&(a, b), &vis) in graph.lines.iter().zip(&graph.line_visibility) {
            if vis != pass {
                continue;
            }
            if let (Some(p), Some(q)) = (pixels[a], pixels[b]) {
                let color = if vis == LineVisibility::Visible { VISIBLE_LINE } else { HIDDEN_LINE };
                draw_line(image, p, q, color);
            }
        }
    }
    for (p, &class) in pixels.iter().zip(&graph.junction_class) {
        if let Some(p) = p {
            draw_dot(image, *p, junction_color(class));
        }
    }
}

/// Decodes a PNG, draws the wireframe over it and re-encodes.
pub fn overlay_png(png: &[u8], graph: &WireframeGraph, k: &CameraIntrinsics) -> Result<Vec<u8>, ForgeError> {
    let mut image = image::load_from_memory(png)
        .map_err(|e| ForgeError::Image(e.to_string()))?
        .to_rgb8();
    draw_wireframe(&mut image, graph, k);
    encode_png(&image)
}

fn put(image: &mut RgbImage, x: i64, y: i64, color: Rgb<u8>) {
    if x >= 0 && y >= 0 && (x as u32) < image.width() && (y as u32) < image.height() {
        image.put_pixel(x as u32, y as u32, color);
    }
}

fn draw_line(image: &mut RgbImage, p: [f64; 2], q: [f64; 2], color: Rgb<u8>) {
    let steps = (q[0] - p[0]).abs().max((q[1] - p[1]).abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let s = i as f64 / steps as f64;
        let x = p[0] + s * (q[0] - p[0]);
        let y = p[1] + s * (q[1] - p[1]);
        put(image, x.floor() as i64, y.floor() as i64, color);
    }
}

fn draw_dot(image: &mut RgbImage, p: [f64; 2], color: Rgb<u8>) {
    let (cx, cy) = (p[0].floor() as i64, p[1].floor() as i64);
    for dy in -1..=1 {
        for dx in -1..=1 {
            put(image, cx + dx, cy + dy, color);
        }
    }
}
