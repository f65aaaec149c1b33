use crate::error::{L2gError, Result};

const CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub dice: f64,
    pub iou: f64,
    pub eps: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { dice: 0.5, iou: 1.0, eps: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct HybridLoss {
    pub total: f64,
    pub bce: f64,
    pub dice: f64,
    pub iou: f64,
    /// d total / d pred.
    pub grad: Vec<f64>,
}

/// `BCE + λ_dice·Dice + λ_iou·IoU` with soft intersection `Σ p·g`.
///
/// Predictions are clamped to `[1e-7, 1 - 1e-7]`; the gradient is zero for
/// entries outside that range.
pub fn hybrid_loss(pred: &[f64], gt: &[bool], w: &LossWeights) -> Result<HybridLoss> {
    if pred.len() != gt.len() {
        return Err(L2gError::Contract(format!(
            "prediction has {} entries, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(L2gError::Contract("empty prediction".into()));
    }
    let n = pred.len() as f64;
    let p: Vec<f64> = pred.iter().map(|v| v.clamp(CLAMP, 1.0 - CLAMP)).collect();
    let g: Vec<f64> = gt.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();

    let bce = -p
        .iter()
        .zip(&g)
        .map(|(p, g)| g * p.ln() + (1.0 - g) * (1.0 - p).ln())
        .sum::<f64>()
        / n;
    let inter: f64 = p.iter().zip(&g).map(|(p, g)| p * g).sum();
    let sp: f64 = p.iter().sum();
    let sg: f64 = g.iter().sum();
    let e = w.eps;
    let dice_den = sp + sg + e;
    let dice = 1.0 - (2.0 * inter + e) / dice_den;
    let union = sp + sg - inter;
    let iou_den = union + e;
    let iou = 1.0 - (inter + e) / iou_den;
    let total = bce + w.dice * dice + w.iou * iou;

    let grad = pred
        .iter()
        .zip(p.iter().zip(&g))
        .map(|(raw, (p, g))| {
            if *raw < CLAMP || *raw > 1.0 - CLAMP {
                return 0.0;
            }
            let d_bce = -(g / p - (1.0 - g) / (1.0 - p)) / n;
            let d_dice = -(2.0 * g * dice_den - (2.0 * inter + e)) / (dice_den * dice_den);
            let d_iou = -(g * iou_den - (inter + e) * (1.0 - g)) / (iou_den * iou_den);
            d_bce + w.dice * d_dice + w.iou * d_iou
        })
        .collect();
    Ok(HybridLoss { total, bce, dice, iou, grad })
}
