//! Line-of-interest sampling on a feature grid.

use super::MatchingError;

/// Row-major grid with `channels` values per node; node (x, y) sits at integer coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self, MatchingError> {
        if width == 0 || height == 0 || channels == 0 || values.len() != width * height * channels {
            return Err(MatchingError::InvalidGrid);
        }
        Ok(Self { width, height, channels, values })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let values = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, channels: 1, values }
    }

    pub fn node(&self, x: usize, y: usize) -> &[f64] {
        let i = (y * self.width + x) * self.channels;
        &self.values[i..i + self.channels]
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(0.0, (self.width - 1) as f64), p[1].clamp(0.0, (self.height - 1) as f64)]
    }

    /// Bilinear interpolation at a point inside the grid.
    pub fn bilinear(&self, p: [f64; 2], out: &mut Vec<f64>) {
        let [x, y] = self.clamp(p);
        let x0 = (x.floor() as usize).min(self.width.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.height.saturating_sub(2));
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let (fx, fy) = (x - x0 as f64, y - y0 as f64);
        for ch in 0..self.channels {
            let v00 = self.node(x0, y0)[ch];
            let v10 = self.node(x1, y0)[ch];
            let v01 = self.node(x0, y1)[ch];
            let v11 = self.node(x1, y1)[ch];
            let top = v00 + fx * (v10 - v00);
            let bottom = v01 + fx * (v11 - v01);
            out.push(top + fy * (bottom - top));
        }
    }
}

/// `n_points` evenly spaced samples from `segment[0]` to `segment[1]` inclusive,
/// channels concatenated per point. Endpoints outside the grid are clamped.
pub fn loi_sample(segment: [[f64; 2]; 2], grid: &FeatureGrid, n_points: usize) -> Result<Vec<f64>, MatchingError> {
    if n_points < 2 {
        return Err(MatchingError::TooFewPoints(n_points));
    }
    if segment.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MatchingError::InvalidSegment);
    }
    let [mut p, mut q] = segment;
    for end in [&mut p, &mut q] {
        let c = grid.clamp(*end);
        if c != *end {
            log::warn!("segment endpoint {end:?} outside {}x{} grid, clamped to {c:?}", grid.width, grid.height);
            *end = c;
        }
    }
    let mut out = Vec::with_capacity(n_points * grid.channels);
    for i in 0..n_points {
        let t = i as f64 / (n_points - 1) as f64;
        grid.bilinear([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])], &mut out);
    }
    Ok(out)
}
