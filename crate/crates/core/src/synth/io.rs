use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackgroundStore, SceneSpec, SynthSample, TemplateEntry, TemplateLibrary, TemplateSet};
use crate::error::{L2gError, Result};
use crate::eval::{write_ground_truth, GroundTruth};
use crate::raster::{load_rgb, Mask};

fn sorted_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut v: Vec<_> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    v.sort();
    Ok(v)
}

/// Reads `<dir>/<instance_id>/view_XX.png` with `view_XX_mask.png`.
pub fn load_template_dir(dir: &Path) -> Result<TemplateLibrary> {
    let mut lib = TemplateLibrary::new();
    for sub in sorted_entries(dir)? {
        if !sub.is_dir() {
            continue;
        }
        let id = sub.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        let mut entries = Vec::new();
        for k in 0.. {
            let img = sub.join(format!("view_{k:02}.png"));
            if !img.exists() {
                break;
            }
            let mask = Mask::load_png(&sub.join(format!("view_{k:02}_mask.png")))?;
            entries.push(TemplateEntry::new(load_rgb(&img)?, mask, id.clone(), k)?);
        }
        if entries.is_empty() {
            return Err(L2gError::Input(format!("template directory `{}` has no views", sub.display())));
        }
        lib.insert(id.clone(), TemplateSet::new(id, entries)?);
    }
    if lib.is_empty() {
        return Err(L2gError::Input(format!("no templates under `{}`", dir.display())));
    }
    Ok(lib)
}

pub fn save_template_dir(lib: &TemplateLibrary, dir: &Path) -> Result<()> {
    for (id, set) in lib {
        let sub = dir.join(id);
        fs::create_dir_all(&sub)?;
        for (k, e) in set.entries.iter().enumerate() {
            e.image.save(sub.join(format!("view_{k:02}.png")))?;
            e.mask.save_png(&sub.join(format!("view_{k:02}_mask.png")))?;
        }
    }
    Ok(())
}

/// Every `*.png` in `dir`, keyed by file name.
pub fn load_backgrounds(dir: &Path) -> Result<BackgroundStore> {
    let mut store = BackgroundStore::new();
    for p in sorted_entries(dir)? {
        if p.extension().and_then(|e| e.to_str()) == Some("png") {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            store.insert(name, load_rgb(&p)?);
        }
    }
    Ok(store)
}

pub fn save_backgrounds(store: &BackgroundStore, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (name, img) in store.images() {
        img.save(dir.join(name))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    image: String,
    spec: SceneSpec,
    gt_masks: BTreeMap<String, String>,
    full_masks: BTreeMap<String, String>,
}

/// Writes images, masks and a `manifest.json` holding every scene spec.
/// Writes `scene_XXXXX.png` with its visible (`_<id>_gt.png`) and full
/// (`_<id>_full.png`) masks, `manifest.json`, and the visible masks again as
/// `ground_truth.json` for `eval`.
pub fn write_samples(samples: &[SynthSample], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = Vec::with_capacity(samples.len());
    let mut gts = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let image = format!("scene_{i:05}.png");
        s.image.save(dir.join(&image))?;
        let mut gt = BTreeMap::new();
        let mut full = BTreeMap::new();
        for (id, m) in &s.gt_masks {
            let f = format!("scene_{i:05}_{id}_gt.png");
            m.save_png(&dir.join(&f))?;
            gt.insert(id.clone(), f);
            if !m.is_empty() {
                gts.push(GroundTruth::new(image.clone(), id.clone(), m.clone())?);
            }
        }
        for (id, m) in &s.full_masks {
            let f = format!("scene_{i:05}_{id}_full.png");
            m.save_png(&dir.join(&f))?;
            full.insert(id.clone(), f);
        }
        manifest.push(ManifestEntry { image, spec: s.spec.clone(), gt_masks: gt, full_masks: full });
    }
    fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
    write_ground_truth(&gts, &dir.join("ground_truth.json"))
}

pub fn read_samples(dir: &Path) -> Result<Vec<SynthSample>> {
    let manifest: Vec<ManifestEntry> = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    let load = |files: &BTreeMap<String, String>| -> Result<BTreeMap<String, Mask>> {
        files.iter().map(|(id, f)| Ok((id.clone(), Mask::load_png(&dir.join(f))?))).collect()
    };
    manifest
        .into_iter()
        .map(|e| {
            Ok(SynthSample {
                image: load_rgb(&dir.join(&e.image))?,
                gt_masks: load(&e.gt_masks)?,
                full_masks: load(&e.full_masks)?,
                spec: e.spec,
            })
        })
        .collect()
}
