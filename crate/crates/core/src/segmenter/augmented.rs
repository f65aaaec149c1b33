use serde::{Deserialize, Serialize};

use super::{keep_prompt_components, prompt_affinity, prompt_patches, Segmenter};
use crate::error::{L2gError, Result};
use crate::features::FeatureGrid;
use crate::numerics::{cosine_grad, cosine_unchecked, norm};
use crate::raster::{Mask, Pixel};

/// Learnable per-instance vector injected into the decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectToken {
    pub instance_id: String,
    pub vector: Vec<f32>,
    pub trained_epochs: u32,
    pub loss_history: Vec<f64>,
}

impl ObjectToken {
    pub fn zeros(instance_id: impl Into<String>, dim: usize) -> Self {
        ObjectToken {
            instance_id: instance_id.into(),
            vector: vec![0.0; dim],
            trained_epochs: 0,
            loss_history: Vec::new(),
        }
    }

    pub fn vector_f64(&self) -> Vec<f64> {
        self.vector.iter().map(|&v| v as f64).collect()
    }
}

/// Fixed fusion gains: `logit = prompt·l + token·cos(F, t) + bias`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderGains {
    pub prompt: f64,
    pub token: f64,
    pub bias: f64,
}

impl Default for DecoderGains {
    fn default() -> Self {
        DecoderGains { prompt: 4.0, token: 4.0, bias: -4.0 }
    }
}

/// Per-patch foreground probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    pub rows: usize,
    pub cols: usize,
    pub probs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dense (unrestricted) decoder output for the given prompt patches and
/// token vector.
pub fn soft_mask(
    grid: &FeatureGrid,
    prompts: &[usize],
    token: &[f64],
    gains: &DecoderGains,
) -> Result<SoftMask> {
    if token.len() != grid.dim() {
        return Err(L2gError::Contract(format!(
            "token dim {} != feature dim {}",
            token.len(),
            grid.dim()
        )));
    }
    let affinity = prompt_affinity(grid, prompts)?;
    let probs = affinity
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let c = cosine_unchecked(grid.feature(j), token);
            sigmoid(gains.prompt * l + gains.token * c + gains.bias)
        })
        .collect();
    Ok(SoftMask { rows: grid.rows(), cols: grid.cols(), probs })
}

/// Back-propagates `d_probs` (dL/dp per patch) through the sigmoid gate and
/// the token cosine into the token vector.
///
/// At the zero token the cosine has no derivative; the direction
/// `F_j / ‖F_j‖` is used instead so that training can leave the origin.
pub fn token_gradient(
    grid: &FeatureGrid,
    probs: &[f64],
    d_probs: &[f64],
    token: &[f64],
    gains: &DecoderGains,
) -> Vec<f64> {
    let mut grad = vec![0.0; token.len()];
    let at_origin = norm(token) == 0.0;
    for j in 0..grid.len() {
        let p = probs[j];
        let dg = d_probs[j] * p * (1.0 - p) * gains.token;
        if dg == 0.0 {
            continue;
        }
        let f = grid.feature(j);
        if at_origin {
            let nf = norm(f);
            if nf > 0.0 {
                for (g, v) in grad.iter_mut().zip(f) {
                    *g += dg * v / nf;
                }
            }
        } else {
            let (_, _, dt) = cosine_grad(f, token);
            for (g, v) in grad.iter_mut().zip(&dt) {
                *g += dg * v;
            }
        }
    }
    grad
}

/// Token-conditioned decoder as a [`Segmenter`]; binarises at 0.5 and keeps
/// only prompt-connected components.
pub struct AugmentedSegmenter<'a> {
    pub token: &'a ObjectToken,
    pub gains: DecoderGains,
}

impl Segmenter for AugmentedSegmenter<'_> {
    fn segment_patches(&self, grid: &FeatureGrid, prompts: &[usize]) -> Result<Vec<bool>> {
        let soft = soft_mask(grid, prompts, &self.token.vector_f64(), &self.gains)?;
        let binary: Vec<bool> = soft.probs.iter().map(|&p| p >= 0.5).collect();
        Ok(keep_prompt_components(grid.rows(), grid.cols(), &binary, prompts))
    }
}

/// Augmented segmentation: soft patch mask plus the restricted pixel mask.
pub fn segment_augmented(
    grid: &FeatureGrid,
    prompts: &[Pixel],
    token: &ObjectToken,
    width: usize,
    height: usize,
) -> Result<(SoftMask, Mask)> {
    let pp = prompt_patches(grid, prompts, width, height)?;
    let gains = DecoderGains::default();
    let soft = soft_mask(grid, &pp, &token.vector_f64(), &gains)?;
    let binary: Vec<bool> = soft.probs.iter().map(|&p| p >= 0.5).collect();
    let kept = keep_prompt_components(grid.rows(), grid.cols(), &binary, &pp);
    Ok((soft, grid.patches_to_mask(&kept, width, height)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{finite_diff_grad, relative_error};
    use crate::segmenter::{hybrid_loss, segment, LossWeights};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize, dim: usize) -> FeatureGrid {
        let data = (0..rows * cols * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        FeatureGrid::new(rows, cols, dim, 4, (0, 0), data).unwrap()
    }

    #[test]
    fn zero_token_keeps_exact_matches_only() {
        // blob of 3 identical patches + a near copy (cos ~ 0.99)
        let mut data = vec![0.0f32; 9 * 3];
        for j in 0..9 {
            data[j * 3 + 2] = 1.0;
        }
        for j in [0usize, 1, 3] {
            data[j * 3..j * 3 + 3].copy_from_slice(&[1.0, 0.0, 0.0]);
        }
        data[4 * 3..4 * 3 + 3].copy_from_slice(&[1.0, 0.1, 0.0]);
        let g = FeatureGrid::new(3, 3, 3, 4, (0, 0), data).unwrap();
        let token = ObjectToken::zeros("a", 3);
        let (_, m) = segment_augmented(&g, &[Pixel::new(1, 1)], &token, 12, 12).unwrap();
        // algebraic equivalence: sigma(4l - 4) >= 0.5 <=> l >= 1
        let oracle = segment(&g, &[Pixel::new(1, 1)], 1.0, 12, 12).unwrap();
        assert_eq!(m, oracle);
        assert_eq!(m.count(), 3 * 16);
    }

    #[test]
    fn matching_token_scores_blob() {
        let data = [1.0f32, 0.0, 1.0, 0.0, 0.0, 1.0].to_vec();
        let g = FeatureGrid::new(1, 3, 2, 4, (0, 0), data).unwrap();
        let soft = soft_mask(&g, &[0], &[1.0, 0.0], &DecoderGains::default()).unwrap();
        let s4 = 1.0 / (1.0 + (-4.0f64).exp());
        assert!((soft.probs[0] - s4).abs() < 1e-12);
        assert!((soft.probs[1] - s4).abs() < 1e-12);
        assert!((s4 - 0.982).abs() < 1e-3);
    }

    #[test]
    fn orthogonal_token_prompt_patch_on_boundary() {
        let data = [1.0f32, 0.0, 0.0, 1.0].to_vec();
        let g = FeatureGrid::new(1, 2, 2, 4, (0, 0), data).unwrap();
        let mut token = ObjectToken::zeros("a", 2);
        token.vector = vec![0.0, 1.0];
        let (soft, m) = segment_augmented(&g, &[Pixel::new(0, 0)], &token, 8, 4).unwrap();
        assert_eq!(soft.probs[0], 0.5);
        assert!(m.get(0, 0));
    }

    #[test]
    fn token_gradient_matches_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = LossWeights::default();
        let gains = DecoderGains::default();
        for _ in 0..20 {
            let g = random_grid(&mut rng, 3, 4, 6);
            let gt: Vec<bool> = (0..12).map(|_| rng.gen_bool(0.4)).collect();
            let prompts = vec![rng.gen_range(0..12), rng.gen_range(0..12)];
            let t: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let loss_at = |t: &[f64]| -> crate::Result<f64> {
                let s = soft_mask(&g, &prompts, t, &gains)?;
                Ok(hybrid_loss(&s.probs, &gt, &w)?.total)
            };
            let s = soft_mask(&g, &prompts, &t, &gains).unwrap();
            let l = hybrid_loss(&s.probs, &gt, &w).unwrap();
            let analytic = token_gradient(&g, &s.probs, &l.grad, &t, &gains);
            let fd = finite_diff_grad(loss_at, &t, 1e-5).unwrap();
            assert!(relative_error(&analytic, &fd) < 1e-4);
        }
    }

    #[test]
    fn zero_token_gradient_is_nonzero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_grid(&mut rng, 3, 3, 4);
        let s = soft_mask(&g, &[0], &[0.0; 4], &DecoderGains::default()).unwrap();
        let d: Vec<f64> = (0..9).map(|j| if j < 4 { -1.0 } else { 1.0 }).collect();
        let grad = token_gradient(&g, &s.probs, &d, &[0.0; 4], &DecoderGains::default());
        assert!(norm(&grad) > 0.0);
    }
}
