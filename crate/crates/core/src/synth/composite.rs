use std::collections::{BTreeMap, HashSet};

use super::augment::augment_object;
use super::{BackgroundStore, SceneMode, SceneSpec, SynthSample, TemplateLibrary};
use crate::error::{L2gError, Result};
use crate::raster::Mask;

/// Renders a scene. Placements are pasted in ascending `z_order` (ties in
/// list order); every pixel belongs to the frontmost placement covering it.
pub fn composite_scene(spec: &SceneSpec, backgrounds: &BackgroundStore, templates: &TemplateLibrary) -> Result<SynthSample> {
    let (w, h) = spec.canvas;
    let mut seen = HashSet::new();
    for p in &spec.placements {
        if !seen.insert(p.instance_id.as_str()) {
            return Err(L2gError::Contract(format!("instance `{}` placed twice", p.instance_id)));
        }
    }
    if spec.mode == SceneMode::Single
        && (spec.placements.len() != 1 || spec.placements[0].instance_id != spec.target_instance_id)
    {
        return Err(L2gError::Contract("single-object scenes hold exactly the target".into()));
    }
    if !spec.placements.iter().any(|p| p.instance_id == spec.target_instance_id) {
        return Err(L2gError::Contract(format!("target `{}` is not placed", spec.target_instance_id)));
    }

    let mut image = backgrounds.render(&spec.background_ref, w, h)?;
    let mut owner: Vec<Option<usize>> = vec![None; (w * h) as usize];
    let mut full_masks = BTreeMap::new();

    let mut order: Vec<usize> = (0..spec.placements.len()).collect();
    order.sort_by_key(|&i| spec.placements[i].z_order);
    for &i in &order {
        let p = &spec.placements[i];
        let set = templates.get(&p.instance_id).ok_or_else(|| L2gError::UnknownInstance(p.instance_id.clone()))?;
        let entry = set
            .entries
            .get(p.view_index)
            .ok_or_else(|| L2gError::Input(format!("instance `{}` has no view {}", p.instance_id, p.view_index)))?;
        let (crop, mask) = augment_object(entry, p.scale, p.rotation, p.blur_sigma)?;
        let (x0, y0) = p.position;
        if x0 < 0 || y0 < 0 || x0 as u32 + crop.width() > w || y0 as u32 + crop.height() > h {
            return Err(L2gError::Generation(format!(
                "placement of `{}` at ({x0}, {y0}) size {}x{} leaves the {w}x{h} canvas",
                p.instance_id,
                crop.width(),
                crop.height()
            )));
        }
        for q in mask.pixels() {
            let (gx, gy) = (x0 as u32 + q.x as u32, y0 as u32 + q.y as u32);
            image.put_pixel(gx, gy, *crop.get_pixel(q.x as u32, q.y as u32));
            owner[(gy * w + gx) as usize] = Some(i);
        }
        full_masks.insert(p.instance_id.clone(), mask.placed(w as usize, h as usize, x0 as i64, y0 as i64));
    }

    let mut gt_masks = BTreeMap::new();
    for (i, p) in spec.placements.iter().enumerate() {
        let m = Mask::from_fn(w as usize, h as usize, |x, y| owner[y * w as usize + x] == Some(i));
        gt_masks.insert(p.instance_id.clone(), m);
    }

    if spec.mode == SceneMode::MultiNoOverlap {
        let masks: Vec<&Mask> = full_masks.values().collect();
        for a in 0..masks.len() {
            for b in a + 1..masks.len() {
                if masks[a].intersection_count(masks[b])? > 0 {
                    return Err(L2gError::Generation("placements overlap in a no-overlap scene".into()));
                }
            }
        }
    }
    Ok(SynthSample { image, gt_masks, full_masks, spec: spec.clone() })
}
