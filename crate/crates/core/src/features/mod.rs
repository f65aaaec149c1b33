//! Dense patch features: the [`FeatureGrid`] container, a deterministic
//! procedural provider, the `L2GF` feature file and template patch sampling.

mod file;
mod provider;
mod sampling;

pub use file::{read_feature_file, write_feature_file, FEATURE_MAGIC, FEATURE_VERSION};
pub use provider::{compute_features, FeatureProvider, ProceduralProvider, PROCEDURAL_DIM};
pub use sampling::sample_template_patches;

use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};
use crate::raster::{Mask, Pixel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PatchIndex {
    pub row: usize,
    pub col: usize,
}

impl PatchIndex {
    pub fn linear(&self, cols: usize) -> usize {
        self.row * cols + self.col
    }
}

/// Per-patch feature vectors of one image, stored as `f32` row-major with
/// an `f64` mirror used for all similarity math.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    rows: usize,
    cols: usize,
    dim: usize,
    stride: u32,
    origin_offset: (i32, i32),
    data: Vec<f32>,
    wide: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        dim: usize,
        stride: u32,
        origin_offset: (i32, i32),
        data: Vec<f32>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || dim == 0 || stride == 0 {
            return Err(L2gError::Input(format!(
                "feature grid needs positive rows/cols/dim/stride, got {rows}x{cols}x{dim} stride {stride}"
            )));
        }
        if data.len() != rows * cols * dim {
            return Err(L2gError::Contract(format!(
                "feature data has {} floats, expected {}",
                data.len(),
                rows * cols * dim
            )));
        }
        let wide = data.iter().map(|&v| v as f64).collect();
        Ok(FeatureGrid { rows, cols, dim, stride, origin_offset, data, wide })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn origin_offset(&self) -> (i32, i32) {
        self.origin_offset
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn index(&self, linear: usize) -> PatchIndex {
        PatchIndex { row: linear / self.cols, col: linear % self.cols }
    }

    /// Feature of patch `linear`, widened to f64.
    pub fn feature(&self, linear: usize) -> &[f64] {
        &self.wide[linear * self.dim..(linear + 1) * self.dim]
    }

    pub fn feature_at(&self, p: PatchIndex) -> &[f64] {
        self.feature(p.linear(self.cols))
    }

    /// Same grid with every vector multiplied by `factor` (f32 arithmetic).
    pub fn scaled(&self, factor: f32) -> FeatureGrid {
        let data = self.data.iter().map(|v| v * factor).collect();
        FeatureGrid::new(self.rows, self.cols, self.dim, self.stride, self.origin_offset, data)
            .expect("same shape")
    }

    /// Pixel at the centre of a patch: `(c + 1/2) * stride + offset`, with
    /// integer division for odd strides.
    pub fn patch_center(&self, p: PatchIndex) -> Pixel {
        let s = self.stride as i32;
        Pixel::new(
            p.col as i32 * s + s / 2 + self.origin_offset.0,
            p.row as i32 * s + s / 2 + self.origin_offset.1,
        )
    }

    pub fn pixel_to_patch(&self, px: Pixel) -> Option<PatchIndex> {
        let s = self.stride as i32;
        let dx = px.x - self.origin_offset.0;
        let dy = px.y - self.origin_offset.1;
        if dx < 0 || dy < 0 {
            return None;
        }
        let (col, row) = ((dx / s) as usize, (dy / s) as usize);
        (row < self.rows && col < self.cols).then_some(PatchIndex { row, col })
    }

    /// Number of set mask pixels inside each patch.
    pub fn coverage(&self, mask: &Mask) -> Vec<usize> {
        let s = self.stride as i64;
        let (ox, oy) = (self.origin_offset.0 as i64, self.origin_offset.1 as i64);
        let mut out = vec![0usize; self.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                let mut n = 0;
                for y in 0..s {
                    for x in 0..s {
                        if mask.get_signed(ox + c as i64 * s + x, oy + r as i64 * s + y) {
                            n += 1;
                        }
                    }
                }
                out[r * self.cols + c] = n;
            }
        }
        out
    }

    /// Patches with at least half of their pixels inside the mask.
    pub fn eligible(&self, mask: &Mask) -> Vec<bool> {
        let area = (self.stride as usize).pow(2);
        self.coverage(mask).into_iter().map(|n| 2 * n >= area).collect()
    }

    /// Paints each selected patch's stride×stride block into a pixel mask.
    pub fn patches_to_mask(&self, selected: &[bool], width: usize, height: usize) -> Mask {
        let s = self.stride as i64;
        let (ox, oy) = (self.origin_offset.0 as i64, self.origin_offset.1 as i64);
        let mut m = Mask::new(width, height);
        for (j, _) in selected.iter().enumerate().filter(|(_, &b)| b) {
            let p = self.index(j);
            for y in 0..s {
                for x in 0..s {
                    let gx = ox + p.col as i64 * s + x;
                    let gy = oy + p.row as i64 * s + y;
                    if gx >= 0 && gy >= 0 && (gx as usize) < width && (gy as usize) < height {
                        m.set(gx as usize, gy as usize, true);
                    }
                }
            }
        }
        m
    }

    /// Mean of the (f64) features of the given patches; `None` if none.
    pub fn mean_feature(&self, selected: &[bool]) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dim];
        let mut n = 0usize;
        for (j, _) in selected.iter().enumerate().filter(|(_, &b)| b) {
            for (a, v) in acc.iter_mut().zip(self.feature(j)) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        acc.iter_mut().for_each(|a| *a /= n as f64);
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, stride: u32, off: (i32, i32)) -> FeatureGrid {
        FeatureGrid::new(rows, cols, 1, stride, off, vec![1.0; rows * cols]).unwrap()
    }

    #[test]
    fn patch_center_geometry_roundtrip() {
        let g = grid(3, 5, 16, (4, -2));
        for r in 0..3 {
            for c in 0..5 {
                let p = PatchIndex { row: r, col: c };
                let px = g.patch_center(p);
                assert_eq!(px, Pixel::new((c as i32) * 16 + 8 + 4, (r as i32) * 16 + 8 - 2));
                assert_eq!(g.pixel_to_patch(px), Some(p));
            }
        }
    }

    #[test]
    fn eligibility_is_half_coverage() {
        let g = grid(1, 2, 4, (0, 0));
        // patch 0: 8 of 16 pixels, patch 1: 7 of 16
        let m = Mask::from_fn(8, 4, |x, y| (x < 2) || (x >= 4 && x < 6 && y < 3) || (x == 6 && y == 0));
        assert_eq!(g.coverage(&m), vec![8, 7]);
        assert_eq!(g.eligible(&m), vec![true, false]);
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(FeatureGrid::new(2, 2, 3, 4, (0, 0), vec![0.0; 11]).is_err());
    }
}
