//! Cut-and-paste synthetic scenes built from template views, with exact
//! visible-pixel ground truth.
//!
//! Three scene modes are supported: the target alone, the target with
//! non-overlapping distractors, and the target with partially overlapping
//! objects in random depth order.

mod augment;
mod composite;
mod generate;
mod io;

pub use augment::augment_object;
pub use composite::composite_scene;
pub use generate::{
    apportion, generate_training_set, sample_scene_spec, scene_rng, AugmentRanges, SceneRequest,
};
pub use io::{
    load_backgrounds, load_template_dir, read_samples, save_backgrounds, save_template_dir, write_samples,
};

use std::collections::BTreeMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};
use crate::raster::Mask;

/// One masked view of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateEntry {
    pub image: RgbImage,
    pub mask: Mask,
    pub instance_id: String,
    pub view_index: usize,
}

impl TemplateEntry {
    pub fn new(image: RgbImage, mask: Mask, instance_id: impl Into<String>, view_index: usize) -> Result<Self> {
        if (image.width() as usize, image.height() as usize) != mask.dims() {
            return Err(L2gError::Contract("template image and mask sizes differ".into()));
        }
        if mask.is_empty() {
            return Err(L2gError::Contract("template mask is empty".into()));
        }
        Ok(TemplateEntry { image, mask, instance_id: instance_id.into(), view_index })
    }
}

/// The K template views of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    pub instance_id: String,
    pub entries: Vec<TemplateEntry>,
}

impl TemplateSet {
    pub fn new(instance_id: impl Into<String>, entries: Vec<TemplateEntry>) -> Result<Self> {
        let instance_id = instance_id.into();
        if entries.is_empty() {
            return Err(L2gError::Contract(format!("template set `{instance_id}` is empty")));
        }
        if entries.iter().any(|e| e.instance_id != instance_id) {
            return Err(L2gError::Contract(format!("template set `{instance_id}` mixes instances")));
        }
        Ok(TemplateSet { instance_id, entries })
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    /// The first `k` views (all of them if `k` exceeds the set size).
    pub fn truncated(&self, k: usize) -> TemplateSet {
        TemplateSet { instance_id: self.instance_id.clone(), entries: self.entries.iter().take(k.max(1)).cloned().collect() }
    }
}

pub type TemplateLibrary = BTreeMap<String, TemplateSet>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneMode {
    Single,
    MultiNoOverlap,
    MultiOverlap,
}

impl SceneMode {
    pub const ALL: [SceneMode; 3] = [SceneMode::Single, SceneMode::MultiNoOverlap, SceneMode::MultiOverlap];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub instance_id: String,
    pub view_index: usize,
    pub scale: f64,
    /// Degrees, counter-clockwise in image coordinates.
    pub rotation: f64,
    pub blur_sigma: f64,
    /// Top-left corner of the transformed crop.
    pub position: (i32, i32),
    /// Higher is in front.
    pub z_order: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub background_ref: String,
    pub canvas: (u32, u32),
    pub placements: Vec<Placement>,
    pub target_instance_id: String,
    pub mode: SceneMode,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub image: RgbImage,
    /// Visible pixels of every placed instance.
    pub gt_masks: BTreeMap<String, Mask>,
    /// Unoccluded pasted masks, for checking occlusion invariants.
    pub full_masks: BTreeMap<String, Mask>,
    pub spec: SceneSpec,
}

/// Named background images. Names starting with `noise:` resolve to the
/// procedural generator seeded by the suffix.
#[derive(Debug, Clone, Default)]
pub struct BackgroundStore {
    images: BTreeMap<String, RgbImage>,
    procedural: std::collections::BTreeSet<u64>,
}

impl BackgroundStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, img: RgbImage) {
        self.images.insert(name.into(), img);
    }

    /// Registers the procedural background `noise:<seed>`.
    pub fn add_procedural(&mut self, seed: u64) {
        self.procedural.insert(seed);
    }

    pub fn with_procedural(seeds: impl IntoIterator<Item = u64>) -> Self {
        let mut s = Self::new();
        seeds.into_iter().for_each(|seed| s.add_procedural(seed));
        s
    }

    /// Image names in sorted order, then procedural refs by seed.
    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> = self.images.keys().cloned().collect();
        v.extend(self.procedural.iter().map(|s| format!("noise:{s}")));
        v
    }

    pub fn images(&self) -> impl Iterator<Item = (&String, &RgbImage)> {
        self.images.iter()
    }

    pub fn len(&self) -> usize {
        self.images.len() + self.procedural.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Background `name` at exactly `width × height` pixels.
    pub fn render(&self, name: &str, width: u32, height: u32) -> Result<RgbImage> {
        if let Some(seed) = name.strip_prefix("noise:") {
            let seed: u64 = seed
                .parse()
                .map_err(|_| L2gError::Input(format!("bad procedural background `{name}`")))?;
            return Ok(crate::library::noise_background(width, height, seed));
        }
        let img = self
            .images
            .get(name)
            .ok_or_else(|| L2gError::Input(format!("unknown background `{name}`")))?;
        if img.dimensions() == (width, height) {
            return Ok(img.clone());
        }
        if img.width() >= width && img.height() >= height {
            return Ok(crate::raster::crop_rgb(img, 0, 0, width, height));
        }
        Ok(image::imageops::resize(img, width, height, image::imageops::FilterType::Triangle))
    }
}
