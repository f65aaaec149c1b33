use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::augmented::{soft_mask, token_gradient, DecoderGains, ObjectToken};
use super::loss::{hybrid_loss, LossWeights};
use crate::error::{L2gError, Result};
use crate::features::FeatureGrid;
use crate::numerics::AdamState;
use crate::raster::Mask;

/// One supervised scene for token training.
#[derive(Debug, Clone)]
pub struct TokenSample<'a> {
    pub grid: &'a FeatureGrid,
    /// Pixel-level visible mask of the instance.
    pub gt_mask: &'a Mask,
}

#[derive(Debug, Clone)]
pub struct TokenTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    /// Upper bound of prompts drawn per step (1..=max_prompts).
    pub max_prompts: usize,
    pub seed: u64,
    pub weights: LossWeights,
    pub gains: DecoderGains,
}

impl Default for TokenTrainConfig {
    fn default() -> Self {
        TokenTrainConfig {
            epochs: 12,
            lr: 5e-3,
            max_prompts: 5,
            seed: 0,
            weights: LossWeights::default(),
            gains: DecoderGains::default(),
        }
    }
}

struct Prepared<'a> {
    grid: &'a FeatureGrid,
    gt_patches: Vec<bool>,
    /// Linear patch indices of every gt pixel that falls on a patch, so
    /// drawing a pixel uniformly is drawing from this list.
    pixel_patches: Vec<usize>,
}

/// Optimises only the token vector, starting from zero, with batch size 1.
pub fn train_token(instance_id: &str, samples: &[TokenSample], cfg: &TokenTrainConfig) -> Result<ObjectToken> {
    if cfg.max_prompts == 0 {
        return Err(L2gError::Config("max_prompts must be >= 1".into()));
    }
    let prepared: Vec<Prepared> = samples
        .iter()
        .filter_map(|s| {
            let gt_patches = s.grid.eligible(s.gt_mask);
            if !gt_patches.iter().any(|&b| b) {
                return None;
            }
            let pixel_patches: Vec<usize> = s
                .gt_mask
                .pixels()
                .filter_map(|p| s.grid.pixel_to_patch(p).map(|i| i.linear(s.grid.cols())))
                .collect();
            (!pixel_patches.is_empty()).then_some(Prepared { grid: s.grid, gt_patches, pixel_patches })
        })
        .collect();
    if prepared.is_empty() {
        return Err(L2gError::Config(format!("no training samples contain instance `{instance_id}`")));
    }
    let dim = prepared[0].grid.dim();
    let mut token = ObjectToken::zeros(instance_id, dim);
    if cfg.epochs == 0 {
        return Ok(token);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vector = vec![0.0f64; dim];
    let mut adam = AdamState::new(dim, cfg.lr);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let s = &prepared[i];
            let u = rng.gen_range(1..=cfg.max_prompts);
            let prompts: Vec<usize> =
                (0..u).map(|_| s.pixel_patches[rng.gen_range(0..s.pixel_patches.len())]).collect();
            let soft = soft_mask(s.grid, &prompts, &vector, &cfg.gains)?;
            let loss = hybrid_loss(&soft.probs, &s.gt_patches, &cfg.weights)?;
            let grad = token_gradient(s.grid, &soft.probs, &loss.grad, &vector, &cfg.gains);
            adam.update(&mut vector, &grad)?;
            total += loss.total;
        }
        token.loss_history.push(total / prepared.len() as f64);
    }
    token.vector = vector.iter().map(|&v| v as f32).collect();
    token.trained_epochs = cfg.epochs as u32;
    Ok(token)
}
