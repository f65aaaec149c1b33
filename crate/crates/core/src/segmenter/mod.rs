//! Promptable mask generation over a feature grid.
//!
//! [`segment`] is the frozen baseline: a patch joins the mask when its best
//! cosine similarity to any prompt patch reaches `theta` and it is
//! 4-connected to a prompt. [`segment_augmented`] adds a learned per-instance
//! [`ObjectToken`] through a fixed sigmoid gate, trained with
//! [`hybrid_loss`] by [`train_token`] and stored in a [`TokenMemory`].

mod augmented;
mod loss;
mod memory;
mod train;

pub use augmented::{
    segment_augmented, soft_mask, token_gradient, AugmentedSegmenter, DecoderGains, ObjectToken,
    SoftMask,
};
pub use loss::{hybrid_loss, HybridLoss, LossWeights};
pub use memory::{TokenMemory, TOKEN_MAGIC, TOKEN_VERSION};
pub use train::{train_token, TokenSample, TokenTrainConfig};

use std::collections::VecDeque;

use crate::error::{L2gError, Result};
use crate::features::FeatureGrid;
use crate::numerics::cosine_unchecked;
use crate::raster::{Mask, Pixel};

pub const DEFAULT_THETA: f64 = 0.8;

/// Anything that turns prompt patches into a patch-level mask.
pub trait Segmenter {
    fn segment_patches(&self, grid: &FeatureGrid, prompts: &[usize]) -> Result<Vec<bool>>;
}

#[derive(Debug, Clone, Copy)]
pub struct BaselineSegmenter {
    pub theta: f64,
}

impl Default for BaselineSegmenter {
    fn default() -> Self {
        BaselineSegmenter { theta: DEFAULT_THETA }
    }
}

impl Segmenter for BaselineSegmenter {
    fn segment_patches(&self, grid: &FeatureGrid, prompts: &[usize]) -> Result<Vec<bool>> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(L2gError::Contract(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        let affinity = prompt_affinity(grid, prompts)?;
        let binary: Vec<bool> = affinity.iter().map(|&l| l >= self.theta).collect();
        Ok(keep_prompt_components(grid.rows(), grid.cols(), &binary, prompts))
    }
}

/// `l_j = max_p cos(F_j, F_p)` over prompt patches.
pub fn prompt_affinity(grid: &FeatureGrid, prompts: &[usize]) -> Result<Vec<f64>> {
    if prompts.is_empty() {
        return Err(L2gError::Contract("at least one prompt is required".into()));
    }
    Ok((0..grid.len())
        .map(|j| {
            prompts
                .iter()
                .map(|&p| cosine_unchecked(grid.feature(j), grid.feature(p)))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Maps prompt pixels to patch indices. Pixels in the right/bottom strip not
/// covered by a full patch snap to the nearest patch.
pub fn prompt_patches(grid: &FeatureGrid, prompts: &[Pixel], width: usize, height: usize) -> Result<Vec<usize>> {
    if prompts.is_empty() {
        return Err(L2gError::Contract("at least one prompt is required".into()));
    }
    let s = grid.stride() as i32;
    let (ox, oy) = grid.origin_offset();
    prompts
        .iter()
        .map(|p| {
            if p.x < 0 || p.y < 0 || p.x as usize >= width || p.y as usize >= height {
                return Err(L2gError::Input(format!(
                    "prompt ({}, {}) outside {width}x{height} image",
                    p.x, p.y
                )));
            }
            let col = ((p.x - ox).max(0) / s).min(grid.cols() as i32 - 1) as usize;
            let row = ((p.y - oy).max(0) / s).min(grid.rows() as i32 - 1) as usize;
            Ok(row * grid.cols() + col)
        })
        .collect()
}

/// Keeps the 4-connected components of `binary` that contain a seed.
pub fn keep_prompt_components(rows: usize, cols: usize, binary: &[bool], seeds: &[usize]) -> Vec<bool> {
    let mut keep = vec![false; rows * cols];
    let mut queue = VecDeque::new();
    for &s in seeds {
        if binary[s] && !keep[s] {
            keep[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(j) = queue.pop_front() {
        let (r, c) = (j / cols, j % cols);
        let mut visit = |n: usize| {
            if binary[n] && !keep[n] {
                keep[n] = true;
                queue.push_back(n);
            }
        };
        if r > 0 {
            visit(j - cols);
        }
        if r + 1 < rows {
            visit(j + cols);
        }
        if c > 0 {
            visit(j - 1);
        }
        if c + 1 < cols {
            visit(j + 1);
        }
    }
    keep
}

/// Baseline promptable segmentation at pixel resolution.
pub fn segment(
    grid: &FeatureGrid,
    prompts: &[Pixel],
    theta: f64,
    width: usize,
    height: usize,
) -> Result<Mask> {
    let pp = prompt_patches(grid, prompts, width, height)?;
    let patches = BaselineSegmenter { theta }.segment_patches(grid, &pp)?;
    Ok(grid.patches_to_mask(&patches, width, height))
}
