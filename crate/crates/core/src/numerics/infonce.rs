use super::{cosine_grad, cosine_unchecked};
use crate::error::{L2gError, Result};

pub const DEFAULT_TAU: f64 = 0.07;

/// InfoNCE loss value together with gradients for every input vector.
#[derive(Debug, Clone)]
pub struct InfoNce {
    pub loss: f64,
    pub d_anchor: Vec<f64>,
    pub d_positive: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

/// `-log(e^{cos(z,z+)/tau} / (e^{cos(z,z+)/tau} + sum e^{cos(z,z-)/tau}))`,
/// evaluated with a max-shifted log-sum-exp.
pub fn infonce_loss(
    anchor: &[f64],
    positive: &[f64],
    negatives: &[Vec<f64>],
    tau: f64,
) -> Result<InfoNce> {
    if !(tau > 0.0) {
        return Err(L2gError::Contract(format!("temperature must be > 0, got {tau}")));
    }
    let d = anchor.len();
    if positive.len() != d || negatives.iter().any(|n| n.len() != d) {
        return Err(L2gError::Contract("InfoNCE inputs differ in dimension".into()));
    }
    if negatives.is_empty() {
        return Ok(InfoNce {
            loss: 0.0,
            d_anchor: vec![0.0; d],
            d_positive: vec![0.0; d],
            d_negatives: Vec::new(),
        });
    }

    let mut logits = Vec::with_capacity(negatives.len() + 1);
    logits.push(cosine_unchecked(anchor, positive) / tau);
    for n in negatives {
        logits.push(cosine_unchecked(anchor, n) / tau);
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = -(logits[0] - max) + sum.ln();

    // dL/dlogit_0 = p_0 - 1, dL/dlogit_i = p_i
    let probs: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    let mut d_anchor = vec![0.0; d];
    let (_, ga, gp) = cosine_grad(anchor, positive);
    let w0 = (probs[0] - 1.0) / tau;
    for i in 0..d {
        d_anchor[i] += w0 * ga[i];
    }
    let d_positive = gp.iter().map(|g| w0 * g).collect();
    let mut d_negatives = Vec::with_capacity(negatives.len());
    for (n, p) in negatives.iter().zip(&probs[1..]) {
        let (_, ga, gn) = cosine_grad(anchor, n);
        let w = p / tau;
        for i in 0..d {
            d_anchor[i] += w * ga[i];
        }
        d_negatives.push(gn.iter().map(|g| w * g).collect());
    }
    Ok(InfoNce { loss: loss.max(0.0), d_anchor, d_positive, d_negatives })
}
