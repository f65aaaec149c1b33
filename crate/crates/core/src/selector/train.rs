use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{L2gError, Result};
use crate::numerics::{infonce_loss, AdamState, AdapterGrad, AdapterParams, DEFAULT_ALPHA, DEFAULT_TAU};
use crate::par;

/// Pre-adapter region vector (encoder output) labelled with its instance.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterSample {
    pub instance: String,
    pub raw: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AdapterTrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub negatives_per_positive: usize,
    pub alpha: f64,
    /// Hidden width; `None` uses the feature dimension.
    pub hidden: Option<usize>,
    pub seed: u64,
}

impl Default for AdapterTrainConfig {
    fn default() -> Self {
        AdapterTrainConfig {
            epochs: 20,
            lr: 5e-4,
            batch_size: 96,
            tau: DEFAULT_TAU,
            negatives_per_positive: 2,
            alpha: DEFAULT_ALPHA,
            hidden: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdapterTraining {
    pub initial: AdapterParams,
    pub adapter: AdapterParams,
    /// Mean InfoNCE loss of every epoch.
    pub epoch_losses: Vec<f64>,
}

struct Tuple {
    anchor: usize,
    positive: usize,
    negatives: Vec<usize>,
}

/// Loss and parameter gradient of one (anchor, positive, negatives) tuple
/// pushed through the adapter.
pub fn tuple_objective(
    adapter: &AdapterParams,
    anchor: &[f64],
    positive: &[f64],
    negatives: &[Vec<f64>],
    tau: f64,
) -> Result<(f64, AdapterGrad)> {
    let za = adapter.apply(anchor)?;
    let zp = adapter.apply(positive)?;
    let zn: Vec<Vec<f64>> = negatives.iter().map(|n| adapter.apply(n)).collect::<Result<_>>()?;
    let r = infonce_loss(&za, &zp, &zn, tau)?;
    let mut grad = AdapterGrad::zeros(adapter);
    adapter.backward(anchor, &r.d_anchor, &mut grad);
    adapter.backward(positive, &r.d_positive, &mut grad);
    for (n, d) in negatives.iter().zip(&r.d_negatives) {
        adapter.backward(n, d, &mut grad);
    }
    Ok((r.loss, grad))
}

/// Contrastive training of the residual adapter. Every sample whose
/// instance has at least one other sample serves as an anchor once per
/// epoch, paired with a random same-instance positive and
/// `negatives_per_positive` random other-instance negatives.
pub fn train_adapter(samples: &[AdapterSample], cfg: &AdapterTrainConfig) -> Result<AdapterTraining> {
    let mut ids: Vec<&str> = samples.iter().map(|s| s.instance.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(L2gError::Config("adapter training needs samples of at least two instances".into()));
    }
    if cfg.batch_size == 0 {
        return Err(L2gError::Config("batch size must be >= 1".into()));
    }
    let dim = samples[0].raw.len();
    if samples.iter().any(|s| s.raw.len() != dim) {
        return Err(L2gError::Contract("adapter samples differ in dimension".into()));
    }
    let label: Vec<usize> = samples.iter().map(|s| ids.binary_search(&s.instance.as_str()).unwrap()).collect();
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (i, &l) in label.iter().enumerate() {
        by_label[l].push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let hidden = cfg.hidden.unwrap_or(dim);
    let initial = AdapterParams::random(dim, hidden, cfg.alpha, &mut rng);
    let mut adapter = initial.clone();
    let mut adam = AdamState::new(adapter.num_params(), cfg.lr);
    let mut flat = adapter.to_flat();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    let anchors: Vec<usize> = (0..samples.len()).filter(|&i| by_label[label[i]].len() > 1).collect();
    if anchors.is_empty() {
        return Err(L2gError::Config("every instance has a single sample; no positives".into()));
    }

    for _ in 0..cfg.epochs {
        let mut order = anchors.clone();
        order.shuffle(&mut rng);
        let tuples: Vec<Tuple> = order
            .iter()
            .map(|&a| {
                let same = &by_label[label[a]];
                let positive = loop {
                    let p = same[rng.gen_range(0..same.len())];
                    if p != a {
                        break p;
                    }
                };
                let negatives = (0..cfg.negatives_per_positive)
                    .map(|_| loop {
                        let n = rng.gen_range(0..samples.len());
                        if label[n] != label[a] {
                            break n;
                        }
                    })
                    .collect();
                Tuple { anchor: a, positive, negatives }
            })
            .collect();

        let mut total = 0.0;
        for batch in tuples.chunks(cfg.batch_size) {
            let results = par::map(batch, |t| {
                let negs: Vec<Vec<f64>> = t.negatives.iter().map(|&n| samples[n].raw.clone()).collect();
                tuple_objective(&adapter, &samples[t.anchor].raw, &samples[t.positive].raw, &negs, cfg.tau)
            });
            let mut grad = AdapterGrad::zeros(&adapter);
            for r in results {
                let (loss, g) = r?;
                total += loss;
                grad.add_assign(&g);
            }
            grad.scale(1.0 / batch.len() as f64);
            adam.update(&mut flat, &grad.to_flat())?;
            adapter.set_flat(&flat)?;
        }
        epoch_losses.push(total / tuples.len() as f64);
    }
    Ok(AdapterTraining { initial, adapter, epoch_losses })
}
