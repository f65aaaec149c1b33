use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::augment::augment_object;
use super::composite::composite_scene;
use super::{BackgroundStore, Placement, SceneMode, SceneSpec, SynthSample, TemplateLibrary};
use crate::error::{L2gError, Result};
use crate::par;
use crate::raster::Mask;

const MAX_PLACEMENT_TRIES: usize = 50;
const MAX_SCENE_TRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentRanges {
    pub scale: (f64, f64),
    pub rotation: (f64, f64),
    pub blur: (f64, f64),
}

impl Default for AugmentRanges {
    fn default() -> Self {
        AugmentRanges { scale: (0.5, 1.5), rotation: (-30.0, 30.0), blur: (0.0, 1.5) }
    }
}

/// Scene layout parameters shared by every generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneRequest {
    pub canvas: (u32, u32),
    pub ranges: AugmentRanges,
    /// Distractors in multi-object scenes are drawn from `1..=max_distractors`.
    pub max_distractors: usize,
    /// Bounds on the overlap area over the occludee's area.
    pub overlap_fraction: (f64, f64),
}

impl Default for SceneRequest {
    fn default() -> Self {
        SceneRequest {
            canvas: (256, 192),
            ranges: AugmentRanges::default(),
            max_distractors: 2,
            overlap_fraction: (0.1, 0.5),
        }
    }
}

/// Largest-remainder split of `n` by integer weights. Ties in the remainder
/// go to the earlier entry.
pub fn apportion(n: usize, ratio: &[u32]) -> Result<Vec<usize>> {
    let total: u64 = ratio.iter().map(|&r| r as u64).sum();
    if total == 0 {
        return Err(L2gError::Config("mode ratio must have a positive entry".into()));
    }
    let mut counts: Vec<usize> = ratio.iter().map(|&r| (n as u64 * r as u64 / total) as usize).collect();
    let mut rems: Vec<(u64, usize)> =
        ratio.iter().enumerate().map(|(i, &r)| (n as u64 * r as u64 % total, i)).collect();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let left = n - counts.iter().sum::<usize>();
    for &(_, i) in rems.iter().take(left) {
        counts[i] += 1;
    }
    Ok(counts)
}

/// Independent RNG stream for sample `index`.
pub fn scene_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

struct Drawn {
    placement: Placement,
    mask: Mask,
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

/// Draws a transform whose crop fits the canvas; the position is left at the
/// origin for the caller.
fn draw_transform<R: Rng>(
    rng: &mut R,
    templates: &TemplateLibrary,
    id: &str,
    req: &SceneRequest,
) -> Result<Drawn> {
    let set = templates.get(id).ok_or_else(|| L2gError::UnknownInstance(id.to_string()))?;
    let (w, h) = req.canvas;
    for _ in 0..MAX_PLACEMENT_TRIES {
        let view_index = rng.gen_range(0..set.k());
        let scale = uniform(rng, req.ranges.scale);
        let rotation = uniform(rng, req.ranges.rotation);
        let blur_sigma = uniform(rng, req.ranges.blur);
        let Ok((_, mask)) = augment_object(&set.entries[view_index], scale, rotation, blur_sigma) else {
            continue;
        };
        if mask.width() as u32 > w || mask.height() as u32 > h {
            continue;
        }
        let placement = Placement {
            instance_id: id.to_string(),
            view_index,
            scale,
            rotation,
            blur_sigma,
            position: (0, 0),
            z_order: 0,
        };
        return Ok(Drawn { placement, mask });
    }
    Err(L2gError::Generation(format!("no transform of `{id}` fits the canvas")))
}

fn full_mask(d: &Drawn, canvas: (u32, u32)) -> Mask {
    let (x, y) = d.placement.position;
    d.mask.placed(canvas.0 as usize, canvas.1 as usize, x as i64, y as i64)
}

fn random_position<R: Rng>(rng: &mut R, d: &Drawn, canvas: (u32, u32)) -> (i32, i32) {
    let mx = canvas.0 - d.mask.width() as u32;
    let my = canvas.1 - d.mask.height() as u32;
    (rng.gen_range(0..=mx) as i32, rng.gen_range(0..=my) as i32)
}

/// Position near `anchor` so the two bounding boxes intersect, clamped to
/// the canvas.
fn position_near<R: Rng>(rng: &mut R, d: &Drawn, anchor: &Drawn, canvas: (u32, u32)) -> (i32, i32) {
    let (ax, ay) = anchor.placement.position;
    let (aw, ah) = (anchor.mask.width() as i32, anchor.mask.height() as i32);
    let (w, h) = (d.mask.width() as i32, d.mask.height() as i32);
    let x = rng.gen_range(ax - w + 1..ax + aw);
    let y = rng.gen_range(ay - h + 1..ay + ah);
    (x.clamp(0, canvas.0 as i32 - w), y.clamp(0, canvas.1 as i32 - h))
}

/// Samples one scene layout for `target` in `mode`.
#[allow(clippy::too_many_arguments)]
pub fn sample_scene_spec<R: Rng>(
    rng: &mut R,
    templates: &TemplateLibrary,
    background_names: &[String],
    target: &str,
    mode: SceneMode,
    req: &SceneRequest,
    rng_seed: u64,
) -> Result<SceneSpec> {
    if background_names.is_empty() {
        return Err(L2gError::Config("background store is empty".into()));
    }
    let background_ref = background_names[rng.gen_range(0..background_names.len())].clone();
    let canvas = req.canvas;
    let mut t = draw_transform(rng, templates, target, req)?;
    t.placement.position = random_position(rng, &t, canvas);
    let mut placed = vec![t];

    if mode != SceneMode::Single {
        let others: Vec<&String> = templates.keys().filter(|k| k.as_str() != target).collect();
        if others.is_empty() {
            return Err(L2gError::Generation("multi-object scenes need at least two instances".into()));
        }
        let n = rng.gen_range(1..=req.max_distractors.max(1)).min(others.len());
        let chosen: Vec<&String> = others.choose_multiple(rng, n).cloned().collect();
        let mut z: Vec<i32> = (0..=n as i32).collect();
        if mode == SceneMode::MultiOverlap {
            z.shuffle(rng);
        }
        placed[0].placement.z_order = z[0];
        let mut occupied = full_mask(&placed[0], canvas);
        for (i, id) in chosen.into_iter().enumerate() {
            let overlapping = mode == SceneMode::MultiOverlap && i == 0;
            let mut ok = None;
            for _ in 0..MAX_PLACEMENT_TRIES {
                let mut d = draw_transform(rng, templates, id, req)?;
                d.placement.z_order = z[i + 1];
                d.placement.position = if overlapping {
                    position_near(rng, &d, &placed[0], canvas)
                } else {
                    random_position(rng, &d, canvas)
                };
                let m = full_mask(&d, canvas);
                let inter = m.intersection_count(&occupied)?;
                let accept = if overlapping {
                    let occludee = if d.placement.z_order < placed[0].placement.z_order { &m } else { &occupied };
                    let frac = inter as f64 / occludee.count() as f64;
                    frac >= req.overlap_fraction.0 && frac <= req.overlap_fraction.1
                } else {
                    inter == 0
                };
                if accept {
                    ok = Some((d, m));
                    break;
                }
            }
            let (d, m) = ok.ok_or_else(|| L2gError::Generation(format!("could not place distractor `{id}`")))?;
            occupied.or_assign(&m)?;
            placed.push(d);
        }
    }
    Ok(SceneSpec {
        background_ref,
        canvas,
        placements: placed.into_iter().map(|d| d.placement).collect(),
        target_instance_id: target.to_string(),
        mode,
        rng_seed,
    })
}

/// `n_per_object` scenes per instance with modes split by `mode_ratio`
/// (single : no-overlap : overlap). Output order is instance id, then mode,
/// then index; parallel and serial runs agree bit for bit.
pub fn generate_training_set(
    templates: &TemplateLibrary,
    backgrounds: &BackgroundStore,
    n_per_object: usize,
    mode_ratio: [u32; 3],
    seed: u64,
    req: &SceneRequest,
) -> Result<Vec<SynthSample>> {
    if backgrounds.is_empty() {
        return Err(L2gError::Config("background store is empty".into()));
    }
    if n_per_object == 0 {
        return Err(L2gError::Config("n_per_object must be >= 1".into()));
    }
    let counts = apportion(n_per_object, &mode_ratio)?;
    let names = backgrounds.names();
    let mut jobs = Vec::new();
    for id in templates.keys() {
        for (mode, &c) in SceneMode::ALL.iter().zip(&counts) {
            for _ in 0..c {
                jobs.push((jobs.len() as u64, id.as_str(), *mode));
            }
        }
    }
    let out = par::map(&jobs, |&(idx, id, mode)| {
        let mut rng = scene_rng(seed, idx);
        let mut last = None;
        for _ in 0..MAX_SCENE_TRIES {
            let attempt = sample_scene_spec(&mut rng, templates, &names, id, mode, req, seed)
                .and_then(|spec| composite_scene(&spec, backgrounds, templates));
            match attempt {
                Ok(s) => return Ok(s),
                Err(e @ L2gError::Generation(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| L2gError::Generation("scene generation failed".into())))
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{TemplateEntry, TemplateSet};
    use image::{Rgb, RgbImage};

    fn library(n: usize) -> TemplateLibrary {
        let mut lib = TemplateLibrary::new();
        for i in 0..n {
            let id = format!("obj{i}");
            let img = RgbImage::from_pixel(24, 20, Rgb([40 * i as u8, 90, 200]));
            let mask = Mask::from_fn(24, 20, |x, y| x >= 2 && y >= 2 && x < 20 + i && y < 17);
            let e = TemplateEntry::new(img, mask, id.clone(), 0).unwrap();
            lib.insert(id.clone(), TemplateSet::new(id, vec![e]).unwrap());
        }
        lib
    }

    fn req() -> SceneRequest {
        SceneRequest { canvas: (96, 72), ..Default::default() }
    }

    #[test]
    fn apportion_largest_remainder() {
        assert_eq!(apportion(3, &[1, 1, 1]).unwrap(), vec![1, 1, 1]);
        assert_eq!(apportion(500, &[1, 1, 1]).unwrap(), vec![167, 167, 166]);
        assert_eq!(apportion(10, &[2, 1, 1]).unwrap(), vec![5, 3, 2]);
        assert!(apportion(4, &[0, 0, 0]).is_err());
    }

    #[test]
    fn one_sample_per_mode() {
        let bg = BackgroundStore::with_procedural([1, 2]);
        let set = generate_training_set(&library(3), &bg, 3, [1, 1, 1], 7, &req()).unwrap();
        assert_eq!(set.len(), 9);
        for chunk in set.chunks(3) {
            let modes: Vec<SceneMode> = chunk.iter().map(|s| s.spec.mode).collect();
            assert_eq!(modes, SceneMode::ALL.to_vec());
        }
    }

    #[test]
    fn invariants_hold() {
        let bg = BackgroundStore::with_procedural([1]);
        let set = generate_training_set(&library(4), &bg, 6, [1, 1, 1], 3, &req()).unwrap();
        for s in &set {
            let masks: Vec<&Mask> = s.gt_masks.values().collect();
            for a in 0..masks.len() {
                assert!(!masks[a].is_empty() || s.spec.mode == SceneMode::MultiOverlap);
                for b in a + 1..masks.len() {
                    assert_eq!(masks[a].intersection_count(masks[b]).unwrap(), 0);
                }
            }
            for (id, gt) in &s.gt_masks {
                assert!(gt.is_subset_of(&s.full_masks[id]));
            }
            let tgt = &s.spec.target_instance_id;
            let top = s.spec.placements.iter().map(|p| p.z_order).max().unwrap();
            let tz = s.spec.placements.iter().find(|p| &p.instance_id == tgt).unwrap().z_order;
            if s.spec.mode == SceneMode::MultiOverlap {
                if tz == top {
                    assert_eq!(s.gt_masks[tgt], s.full_masks[tgt]);
                } else {
                    assert!(s.gt_masks[tgt].count() < s.full_masks[tgt].count());
                }
            } else {
                assert_eq!(s.gt_masks[tgt], s.full_masks[tgt]);
            }
        }
    }

    #[test]
    fn deterministic() {
        let bg = BackgroundStore::with_procedural([5]);
        let a = generate_training_set(&library(2), &bg, 4, [1, 1, 1], 11, &req()).unwrap();
        let b = generate_training_set(&library(2), &bg, 4, [1, 1, 1], 11, &req()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_backgrounds_is_config_error() {
        let r = generate_training_set(&library(2), &BackgroundStore::new(), 3, [1, 1, 1], 0, &req());
        assert!(matches!(r, Err(L2gError::Config(_))));
    }
}
