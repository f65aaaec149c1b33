//! Browser demo. Builds a small seeded corpus, trains the adapter and the
//! object tokens in the page, and exposes three operations on a query
//! scene: probing a clicked point, and full detection with an adjustable
//! filtering margin.

use image::{Rgb, RgbImage};
use l2g_core::pipeline::{
    build_corpus, detect_traced, draw_mask_contour, draw_point, render_overlay, Corpus, CorpusConfig, Models,
    PipelineConfig, Query, TrainedModels,
};
use l2g_core::segmenter::BaselineSegmenter;
use l2g_core::selector::{probe_candidate, region_embedding, template_embedding};
use l2g_core::{L2gError, Pixel, ProceduralProvider};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const STRIDE: u32 = 8;

fn demo_corpus(seed: u64) -> CorpusConfig {
    CorpusConfig {
        n_instances: 4,
        synth_per_object: 12,
        n_queries: 8,
        n_backgrounds: 4,
        seed,
        adapter_epochs: 10,
        token_epochs: 6,
        ..CorpusConfig::default()
    }
}

#[derive(Serialize)]
struct DetectionInfo {
    score: f64,
    bbox: [u32; 4],
    accepted: bool,
    iou_with_gt: f64,
}

#[derive(Serialize)]
struct DetectSummary {
    candidates: usize,
    selected: usize,
    clusters: usize,
    detections: Vec<DetectionInfo>,
}

#[wasm_bindgen]
pub struct Demo {
    corpus: Corpus,
    models: TrainedModels,
    scene: usize,
    last_score: f64,
    last_summary: String,
}

#[wasm_bindgen]
impl Demo {
    /// Builds the corpus and trains both learned components.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Demo, String> {
        let cc = demo_corpus(seed as u64);
        let corpus = build_corpus(&cc, &ProceduralProvider::default(), STRIDE).map_err(err)?;
        let models = corpus.train(&cc, true, true).map_err(err)?;
        Ok(Demo { corpus, models, scene: 0, last_score: f64::NAN, last_summary: String::new() })
    }

    pub fn scene_count(&self) -> usize {
        self.corpus.queries.len()
    }

    pub fn set_scene(&mut self, i: usize) {
        self.scene = i % self.scene_count();
    }

    pub fn width(&self) -> u32 {
        self.query().image.width()
    }

    pub fn height(&self) -> u32 {
        self.query().image.height()
    }

    /// Instance the current scene is searched for.
    pub fn target(&self) -> String {
        self.query().target.clone()
    }

    pub fn scene_rgba(&self) -> Vec<u8> {
        rgba(&self.query().image)
    }

    pub fn template_count(&self) -> usize {
        self.corpus.templates[&self.query().target].entries.len()
    }

    /// Template view `k` of the current target, as a square RGBA image.
    pub fn template_rgba(&self, k: usize) -> Vec<u8> {
        let set = &self.corpus.templates[&self.query().target];
        rgba(&set.entries[k % set.entries.len()].image)
    }

    pub fn template_size(&self) -> u32 {
        self.corpus.templates[&self.query().target].entries[0].image.width()
    }

    /// Single-point probe at (x, y): segments around the point and scores
    /// the region against the target's templates. Returns the scene with
    /// the probe mask outlined; the score is available from `last_score`.
    pub fn probe(&mut self, x: i32, y: i32) -> Result<Vec<u8>, String> {
        let q = self.query();
        let (w, h) = (q.image.width() as usize, q.image.height() as usize);
        let point = Pixel::new(x, y);
        let seg = BaselineSegmenter { theta: PipelineConfig::default().theta };
        let patch_mask = probe_candidate(&seg, &q.grid, point, w, h).map_err(err)?;
        let mask = q.grid.patches_to_mask(patch_mask.as_slice(), w, h);
        let adapter = self.models.adapter.as_ref().ok_or("adapter not trained")?;
        let region = region_embedding(&q.grid, &mask, adapter).map_err(err)?;
        let mut best = f64::NEG_INFINITY;
        for v in &self.corpus.views[&q.target] {
            best = best.max(region.cosine(&template_embedding(v, adapter).map_err(err)?));
        }
        let mut out = q.image.clone();
        draw_mask_contour(&mut out, &mask, Rgb([0, 200, 255]));
        draw_point(&mut out, point, 2, Rgb([255, 0, 255]));
        self.last_score = best;
        Ok(rgba(&out))
    }

    pub fn last_score(&self) -> f64 {
        self.last_score
    }

    /// Full pipeline with filtering margin `delta`. Returns the overlay;
    /// `last_summary` holds a JSON description of the run.
    pub fn detect(&mut self, delta: f64, use_adapter: bool, use_token: bool) -> Result<Vec<u8>, String> {
        let cfg = PipelineConfig { delta, use_adapter, use_token, stride: STRIDE, ..PipelineConfig::default() };
        let q = self.query();
        let query = Query { name: &q.name, grid: &q.grid, width: q.image.width() as usize, height: q.image.height() as usize };
        let models = Models { adapter: self.models.adapter.as_ref(), memory: self.models.memory.as_ref() };
        let trace = detect_traced(query, &q.target, &self.corpus.views[&q.target], models, &cfg).map_err(err)?;
        let detections = trace
            .detections
            .iter()
            .map(|d| {
                Ok(DetectionInfo {
                    score: d.score,
                    bbox: d.bbox,
                    accepted: l2g_core::pipeline::accept(d, cfg.accept_threshold),
                    iou_with_gt: l2g_core::eval::mask_iou(&d.mask, &q.gt)?,
                })
            })
            .collect::<l2g_core::Result<Vec<_>>>()
            .map_err(err)?;
        let summary = DetectSummary {
            candidates: trace.candidates.total(),
            selected: trace.selected.union.len(),
            clusters: trace.selected.clusters.len(),
            detections,
        };
        let image = render_overlay(&q.image, &trace, cfg.accept_threshold);
        self.last_summary = serde_json::to_string(&summary).map_err(|e| e.to_string())?;
        Ok(rgba(&image))
    }

    pub fn last_summary(&self) -> String {
        self.last_summary.clone()
    }
}

impl Demo {
    fn query(&self) -> &l2g_core::pipeline::QueryScene {
        &self.corpus.queries[self.scene]
    }
}

fn err(e: L2gError) -> String {
    e.to_string()
}

fn rgba(img: &RgbImage) -> Vec<u8> {
    img.pixels().flat_map(|p| [p.0[0], p.0[1], p.0[2], 255]).collect()
}
