use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Detection, GroundTruth};
use crate::error::{L2gError, Result};
use crate::raster::{Mask, Rle};

/// On-disk detection or ground-truth entry. Ground truth omits `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image: String,
    pub instance_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub bbox: [u32; 4],
    pub mask_rle: Rle,
}

impl DetectionRecord {
    fn mask(&self) -> Result<Mask> {
        let m = Mask::from_rle(&self.mask_rle)?;
        if m.is_empty() {
            return Err(L2gError::format("mask_rle", "mask is empty"));
        }
        if m.bbox() != Some(self.bbox) {
            return Err(L2gError::format("bbox", "does not match the mask"));
        }
        Ok(m)
    }
}

impl From<&Detection> for DetectionRecord {
    fn from(d: &Detection) -> Self {
        DetectionRecord {
            image: d.image.clone(),
            instance_id: d.instance_id.clone(),
            score: Some(d.score),
            bbox: d.bbox,
            mask_rle: d.mask.to_rle(),
        }
    }
}

pub fn write_detections(dets: &[Detection], path: &Path) -> Result<()> {
    let recs: Vec<DetectionRecord> = dets.iter().map(Into::into).collect();
    std::fs::write(path, serde_json::to_vec_pretty(&recs)?)?;
    Ok(())
}

pub fn read_detections(path: &Path) -> Result<Vec<Detection>> {
    let recs: Vec<DetectionRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
    recs.into_iter()
        .map(|r| {
            let score = r.score.ok_or_else(|| L2gError::format("score", "missing"))?;
            if !score.is_finite() {
                return Err(L2gError::format("score", "not finite"));
            }
            Ok(Detection { mask: r.mask()?, image: r.image, instance_id: r.instance_id, bbox: r.bbox, score })
        })
        .collect()
}

pub fn write_ground_truth(gts: &[GroundTruth], path: &Path) -> Result<()> {
    let recs: Vec<DetectionRecord> = gts
        .iter()
        .map(|g| {
            Ok(DetectionRecord {
                image: g.image.clone(),
                instance_id: g.instance_id.clone(),
                score: None,
                bbox: super::mask_to_bbox(&g.mask)?,
                mask_rle: g.mask.to_rle(),
            })
        })
        .collect::<Result<_>>()?;
    std::fs::write(path, serde_json::to_vec_pretty(&recs)?)?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GroundTruth>> {
    let recs: Vec<DetectionRecord> = serde_json::from_slice(&std::fs::read(path)?)?;
    recs.into_iter()
        .map(|r| Ok(GroundTruth { mask: r.mask()?, image: r.image, instance_id: r.instance_id }))
        .collect()
}
