//! Mask IoU and COCO-style mask AP.

mod json;

pub use json::{
    read_detections, read_ground_truth, write_detections, write_ground_truth, DetectionRecord,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};
use crate::par;
use crate::raster::Mask;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn iou_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

pub fn mask_iou(a: &Mask, b: &Mask) -> Result<f64> {
    let union = a.union_count(b)?;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(a.intersection_count(b)? as f64 / union as f64)
}

/// Tight `(x, y, w, h)` box.
pub fn mask_to_bbox(mask: &Mask) -> Result<[u32; 4]> {
    mask.bbox().ok_or_else(|| L2gError::Contract("bounding box of an empty mask".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image: String,
    pub instance_id: String,
    pub mask: Mask,
    pub bbox: [u32; 4],
    pub score: f64,
}

impl Detection {
    pub fn new(image: impl Into<String>, instance_id: impl Into<String>, mask: Mask, score: f64) -> Result<Self> {
        let bbox = mask_to_bbox(&mask)?;
        Ok(Detection { image: image.into(), instance_id: instance_id.into(), mask, bbox, score })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image: String,
    pub instance_id: String,
    pub mask: Mask,
}

impl GroundTruth {
    pub fn new(image: impl Into<String>, instance_id: impl Into<String>, mask: Mask) -> Result<Self> {
        if mask.is_empty() {
            return Err(L2gError::Contract("ground-truth mask is empty".into()));
        }
        Ok(GroundTruth { image: image.into(), instance_id: instance_id.into(), mask })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApSummary {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    /// One value per threshold in [`iou_thresholds`] order.
    pub per_threshold: Vec<f64>,
    /// AP over thresholds for every instance with ground truth.
    pub per_instance: BTreeMap<String, f64>,
}

/// All-point interpolated AP of one ranked list: `tp[i]` tells whether the
/// i-th ranked detection matched, out of `n_gt` ground truths.
pub fn envelope_ap(tp: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut prec = Vec::with_capacity(tp.len());
    let mut rec = Vec::with_capacity(tp.len());
    let mut hits = 0usize;
    for (i, &t) in tp.iter().enumerate() {
        hits += t as usize;
        prec.push(hits as f64 / (i + 1) as f64);
        rec.push(hits as f64 / n_gt as f64);
    }
    for i in (0..prec.len().saturating_sub(1)).rev() {
        prec[i] = prec[i].max(prec[i + 1]);
    }
    let mut ap = 0.0;
    let mut last = 0.0;
    for i in 0..tp.len() {
        if tp[i] {
            ap += (rec[i] - last) * prec[i];
            last = rec[i];
        }
    }
    ap
}

/// Greedy matching at threshold `t`: each detection, in ranked order, takes
/// the unmatched ground truth of highest IoU (lowest index on ties) with
/// IoU >= `t`. `ious[d][g]` is `None` for pairs in different images.
fn greedy_tp(ious: &[Vec<Option<f64>>], n_gt: usize, t: f64) -> Vec<bool> {
    let mut used = vec![false; n_gt];
    ious.iter()
        .map(|row| {
            let mut best: Option<(usize, f64)> = None;
            for (g, iou) in row.iter().enumerate() {
                if let Some(v) = *iou {
                    if !used[g] && v >= t && best.map_or(true, |(_, b)| v > b) {
                        best = Some((g, v));
                    }
                }
            }
            if let Some((g, _)) = best {
                used[g] = true;
            }
            best.is_some()
        })
        .collect()
}

/// Mask AP averaged over the IoU thresholds and over instances that have
/// ground truth. Detections of one instance are ranked by descending score;
/// equal scores keep their input order.
pub fn compute_ap(detections: &[Detection], gts: &[GroundTruth]) -> Result<ApSummary> {
    let mut ids: Vec<&str> = gts.iter().map(|g| g.instance_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();

    let thresholds = iou_thresholds();
    let mut per_instance_thr: Vec<[f64; 10]> = Vec::with_capacity(ids.len());
    for id in &ids {
        let g: Vec<&GroundTruth> = gts.iter().filter(|g| g.instance_id == *id).collect();
        let mut d: Vec<&Detection> = detections.iter().filter(|d| d.instance_id == *id).collect();
        d.sort_by(|a, b| b.score.total_cmp(&a.score));
        let ious = d
            .iter()
            .map(|det| {
                g.iter()
                    .map(|gt| (gt.image == det.image).then(|| mask_iou(&det.mask, &gt.mask)).transpose())
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let aps = par::map(&thresholds, |&t| envelope_ap(&greedy_tp(&ious, g.len(), t), g.len()));
        per_instance_thr.push(std::array::from_fn(|i| aps[i]));
    }

    let n = ids.len().max(1) as f64;
    let per_threshold: Vec<f64> =
        (0..thresholds.len()).map(|t| per_instance_thr.iter().map(|a| a[t]).sum::<f64>() / n).collect();
    let per_instance = ids
        .iter()
        .zip(&per_instance_thr)
        .map(|(id, a)| (id.to_string(), a.iter().sum::<f64>() / a.len() as f64))
        .collect();
    Ok(ApSummary {
        ap: per_threshold.iter().sum::<f64>() / per_threshold.len() as f64,
        ap50: per_threshold[0],
        ap75: per_threshold[5],
        per_threshold,
        per_instance,
    })
}
