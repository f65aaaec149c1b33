use image::RgbImage;

use super::{detect, Models, PipelineConfig, Query};
use crate::error::Result;
use crate::eval::{mask_iou, Detection};
use crate::features::FeatureProvider;
use crate::matching::TemplateView;
use crate::par;
use crate::raster::crop_rgb;

/// Window start offsets along one axis. The last window is flush with the
/// far edge; a window at least as long as the axis gives a single origin.
pub fn window_origins(len: u32, window: u32, overlap: u32) -> Vec<u32> {
    if window >= len {
        return vec![0];
    }
    let step = (window - overlap).max(1);
    let mut v: Vec<u32> = (0..).map(|i| i * step).take_while(|&o| o + window < len).collect();
    v.push(len - window);
    v.dedup();
    v
}

/// Greedy mask NMS: detections are visited by descending score (stable) and
/// dropped when their IoU with an already kept one exceeds `iou`.
pub fn nms(mut dets: Vec<Detection>, iou: f64) -> Result<Vec<Detection>> {
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut kept: Vec<Detection> = Vec::with_capacity(dets.len());
    'next: for d in dets {
        for k in &kept {
            if k.image == d.image && k.instance_id == d.instance_id && mask_iou(&k.mask, &d.mask)? > iou {
                continue 'next;
            }
        }
        kept.push(d);
    }
    Ok(kept)
}

/// Like [`nms`], but a detection is also dropped when more than `frac` of
/// its own area lies inside an already kept mask.
pub fn suppress_fragments(mut dets: Vec<Detection>, iou: f64, frac: f64) -> Result<Vec<Detection>> {
    dets.sort_by(|a, b| b.score.total_cmp(&a.score));
    let mut kept: Vec<Detection> = Vec::with_capacity(dets.len());
    'next: for d in dets {
        let area = d.mask.count() as f64;
        for k in &kept {
            if k.image != d.image || k.instance_id != d.instance_id {
                continue;
            }
            let inter = k.mask.intersection_count(&d.mask)? as f64;
            if mask_iou(&k.mask, &d.mask)? > iou || inter > frac * area {
                continue 'next;
            }
        }
        kept.push(d);
    }
    Ok(kept)
}

/// Sliding-window detection for images larger than `cfg.window`. Each
/// window is featurised and searched on its own; masks are mapped back to
/// image coordinates and merged by [`nms`]. When the window does not fit
/// inside the image, the whole image is processed as one window.
#[allow(clippy::too_many_arguments)]
pub fn detect_tiled(
    image: &RgbImage,
    name: &str,
    provider: &dyn FeatureProvider,
    instance_id: &str,
    views: &[TemplateView],
    models: Models,
    cfg: &PipelineConfig,
) -> Result<Vec<Detection>> {
    cfg.validate()?;
    let (w, h) = image.dimensions();
    let (ww, wh) = if cfg.window.0 > w || cfg.window.1 > h { (w, h) } else { cfg.window };
    let xs = window_origins(w, ww, cfg.window_overlap.0);
    let ys = window_origins(h, wh, cfg.window_overlap.1);
    let origins: Vec<(u32, u32)> = ys.iter().flat_map(|&y| xs.iter().map(move |&x| (x, y))).collect();

    let per_window = par::map(&origins, |&(x0, y0)| -> Result<Vec<Detection>> {
        let crop = crop_rgb(image, x0, y0, ww, wh);
        let grid = provider.extract(&crop, cfg.stride)?;
        let q = Query { name, grid: &grid, width: ww as usize, height: wh as usize };
        detect(q, instance_id, views, models, cfg)?
            .into_iter()
            .map(|d| {
                let mask = d.mask.placed(w as usize, h as usize, x0 as i64, y0 as i64);
                Detection::new(d.image, d.instance_id, mask, d.score)
            })
            .collect()
    });
    let mut all = Vec::new();
    for r in per_window {
        all.extend(r?);
    }
    nms(all, cfg.nms_iou)
}
