use image::RgbImage;

use super::FeatureGrid;
use crate::error::{L2gError, Result};

/// Produces a dense feature grid for an image. Stand-in for a frozen
/// backbone; real backbone features can be ingested through the feature
/// file instead.
pub trait FeatureProvider: Sync {
    fn extract(&self, image: &RgbImage, stride: u32) -> Result<FeatureGrid>;
}

/// 3 colour + 8 orientation + 4 position channels.
pub const PROCEDURAL_DIM: usize = 15;

/// Deterministic hand-crafted patch descriptor: centred mean RGB, an 8-bin
/// magnitude-weighted gradient orientation histogram of luma, and four
/// low-gain sinusoidal position channels, L2-normalised.
///
/// Every value depends only on the pixels of its own patch.
#[derive(Debug, Clone, Copy)]
pub struct ProceduralProvider {
    pub gradient_gain: f64,
    pub position_gain: f64,
    pub position_period: f64,
}

impl Default for ProceduralProvider {
    fn default() -> Self {
        ProceduralProvider { gradient_gain: 4.0, position_gain: 0.05, position_period: 256.0 }
    }
}

/// Octant of a gradient direction, decided by sign and magnitude
/// comparisons only (no trigonometry).
fn octant(gx: f64, gy: f64) -> usize {
    let (ax, ay) = (gx.abs(), gy.abs());
    match (gx >= 0.0, gy >= 0.0, ax >= ay) {
        (true, true, true) => 0,
        (true, true, false) => 1,
        (false, true, false) => 2,
        (false, true, true) => 3,
        (false, false, true) => 4,
        (false, false, false) => 5,
        (true, false, false) => 6,
        (true, false, true) => 7,
    }
}

impl ProceduralProvider {
    fn patch_vector(&self, luma: &[f64], img: &RgbImage, x0: u32, y0: u32, s: u32) -> Vec<f64> {
        let w = img.width() as usize;
        let mut v = vec![0.0f64; PROCEDURAL_DIM];
        let mut rgb = [0.0f64; 3];
        for y in y0..y0 + s {
            for x in x0..x0 + s {
                let p = img.get_pixel(x, y).0;
                for c in 0..3 {
                    rgb[c] += p[c] as f64;
                }
            }
        }
        let n = (s * s) as f64;
        for c in 0..3 {
            v[c] = rgb[c] / (255.0 * n) - 0.5;
        }
        let mut hist = [0.0f64; 8];
        for y in y0..y0 + s - 1 {
            for x in x0..x0 + s - 1 {
                let i = y as usize * w + x as usize;
                let gx = luma[i + 1] - luma[i];
                let gy = luma[i + w] - luma[i];
                let mag = (gx * gx + gy * gy).sqrt();
                if mag > 0.0 {
                    hist[octant(gx, gy)] += mag;
                }
            }
        }
        let m = ((s - 1) * (s - 1)) as f64;
        for b in 0..8 {
            v[3 + b] = self.gradient_gain * hist[b] / m;
        }
        let cx = x0 as f64 + s as f64 / 2.0;
        let cy = y0 as f64 + s as f64 / 2.0;
        let tau = std::f64::consts::TAU / self.position_period;
        v[11] = self.position_gain * (tau * cx).sin();
        v[12] = self.position_gain * (tau * cx).cos();
        v[13] = self.position_gain * (tau * cy).sin();
        v[14] = self.position_gain * (tau * cy).cos();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }
}

impl FeatureProvider for ProceduralProvider {
    fn extract(&self, image: &RgbImage, stride: u32) -> Result<FeatureGrid> {
        if stride < 4 {
            return Err(L2gError::Input(format!("stride must be >= 4, got {stride}")));
        }
        let (w, h) = image.dimensions();
        if w < stride || h < stride {
            return Err(L2gError::Input(format!(
                "image {w}x{h} is smaller than one {stride}px patch"
            )));
        }
        let luma: Vec<f64> = image
            .pixels()
            .map(|p| {
                (0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64) / 255.0
            })
            .collect();
        let cols = (w / stride) as usize;
        let rows = (h / stride) as usize;
        let mut data = Vec::with_capacity(rows * cols * PROCEDURAL_DIM);
        for r in 0..rows {
            for c in 0..cols {
                let v = self.patch_vector(&luma, image, c as u32 * stride, r as u32 * stride, stride);
                data.extend(v.into_iter().map(|x| x as f32));
            }
        }
        FeatureGrid::new(rows, cols, PROCEDURAL_DIM, stride, (0, 0), data)
    }
}

pub fn compute_features(
    image: &RgbImage,
    provider: &dyn FeatureProvider,
    stride: u32,
) -> Result<FeatureGrid> {
    provider.extract(image, stride)
}
