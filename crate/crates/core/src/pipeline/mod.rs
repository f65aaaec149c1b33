//! End-to-end detection, tiled inference, acceptance gating and the
//! benchmark harness.

mod bench;
mod overlay;
mod tiled;

pub use bench::{
    build_corpus, run_benchmark, run_k_sweep, BenchmarkReport, ConfigResult, Corpus, CorpusConfig, KSweepPoint,
    QueryScene, Timings, TrainedModels,
};
pub use overlay::{contour, draw_mask_contour, draw_point, render_overlay};
pub use tiled::{detect_tiled, nms, suppress_fragments, window_origins};

use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};
use crate::eval::Detection;
use crate::features::FeatureGrid;
use crate::matching::{generate_candidates, CandidateSet, TemplateView};
use crate::numerics::AdapterParams;
use crate::raster::Pixel;
use crate::segmenter::{prompt_patches, AugmentedSegmenter, BaselineSegmenter, DecoderGains, Segmenter, TokenMemory};
use crate::selector::{
    aggregate_and_cluster, filter_candidates, fps_select, region_embedding, score_candidates, template_embedding,
    ScoringMode, SelectedPoints,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub stride: u32,
    pub s_patches: usize,
    pub k_templates: usize,
    pub delta: f64,
    pub theta: f64,
    pub prompt_budget: usize,
    pub cluster_radius: f64,
    pub window: (u32, u32),
    pub window_overlap: (u32, u32),
    pub nms_iou: f64,
    pub accept_threshold: f64,
    pub seed: u64,
    pub use_adapter: bool,
    pub use_token: bool,
    pub scoring_mode: ScoringMode,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stride: 8,
            s_patches: 10,
            k_templates: 12,
            delta: 0.01,
            theta: crate::segmenter::DEFAULT_THETA,
            prompt_budget: 5,
            cluster_radius: 16.0,
            window: (256, 192),
            window_overlap: (64, 48),
            nms_iou: 0.5,
            accept_threshold: 0.7,
            seed: 0,
            use_adapter: true,
            use_token: true,
            scoring_mode: ScoringMode::TemplateSpecific,
        }
    }
}

impl PipelineConfig {
    /// The four ablation settings: neither, adapter only, token only, both.
    pub fn ablation(&self) -> Vec<(String, PipelineConfig)> {
        [(false, false, "none"), (true, false, "adapter"), (false, true, "token"), (true, true, "adapter+token")]
            .into_iter()
            .map(|(a, t, name)| (name.to_string(), PipelineConfig { use_adapter: a, use_token: t, ..self.clone() }))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(L2gError::Config(m.to_string()));
        if self.stride == 0 {
            return bad("stride must be >= 1");
        }
        if self.s_patches == 0 || self.k_templates == 0 || self.prompt_budget == 0 {
            return bad("s_patches, k_templates and prompt_budget must be >= 1");
        }
        if !(self.delta > 0.0) {
            return bad("delta must be > 0");
        }
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return bad("theta must lie in (0, 1]");
        }
        if !(self.cluster_radius > 0.0) {
            return bad("cluster_radius must be > 0");
        }
        if self.window.0 < self.stride || self.window.1 < self.stride {
            return bad("window must be at least one stride");
        }
        if self.window_overlap.0 >= self.window.0 || self.window_overlap.1 >= self.window.1 {
            return bad("window_overlap must be smaller than the window");
        }
        if !(0.0..=1.0).contains(&self.nms_iou) {
            return bad("nms_iou must lie in [0, 1]");
        }
        if !(-1.0..=1.0).contains(&self.accept_threshold) {
            return bad("accept_threshold must lie in [-1, 1]");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| L2gError::Config(format!("pipeline config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A query image already turned into features.
#[derive(Debug, Clone, Copy)]
pub struct Query<'a> {
    pub name: &'a str,
    pub grid: &'a FeatureGrid,
    pub width: usize,
    pub height: usize,
}

/// Learned components available to [`detect`].
#[derive(Debug, Clone, Copy, Default)]
pub struct Models<'a> {
    pub adapter: Option<&'a AdapterParams>,
    pub memory: Option<&'a TokenMemory>,
}

/// Intermediate state of one detection run, for overlays and the demo.
#[derive(Debug, Clone)]
pub struct DetectTrace {
    pub candidates: CandidateSet,
    pub selected: SelectedPoints,
    /// Prompts chosen for every cluster.
    pub prompts: Vec<Vec<Pixel>>,
    pub detections: Vec<Detection>,
}

pub fn accept(detection: &Detection, threshold: f64) -> bool {
    detection.score > threshold
}

/// Detects `instance_id` in one query. Returns detections ranked by score.
pub fn detect(
    query: Query,
    instance_id: &str,
    views: &[TemplateView],
    models: Models,
    cfg: &PipelineConfig,
) -> Result<Vec<Detection>> {
    detect_traced(query, instance_id, views, models, cfg).map(|t| t.detections)
}

pub fn detect_traced(
    query: Query,
    instance_id: &str,
    views: &[TemplateView],
    models: Models,
    cfg: &PipelineConfig,
) -> Result<DetectTrace> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(L2gError::UnknownInstance(instance_id.to_string()));
    }
    let views = &views[..cfg.k_templates.min(views.len())];
    let dim = query.grid.dim();
    let identity = AdapterParams::identity(dim);
    let adapter = if cfg.use_adapter {
        models.adapter.ok_or_else(|| L2gError::Config("use_adapter is set but no adapter was given".into()))?
    } else {
        &identity
    };
    let token = if cfg.use_token {
        let memory = models.memory.ok_or_else(|| L2gError::Config("use_token is set but no token memory was given".into()))?;
        Some(memory.get(instance_id).ok_or_else(|| {
            L2gError::Config(format!("token memory has no token for `{instance_id}`"))
        })?)
    } else {
        None
    };
    let baseline = BaselineSegmenter { theta: cfg.theta };
    let augmented = token.map(|t| AugmentedSegmenter { token: t, gains: DecoderGains::default() });
    let segmenter: &dyn Segmenter = match &augmented {
        Some(a) => a,
        None => &baseline,
    };

    let candidates = generate_candidates(views, query.grid, cfg.s_patches)?;
    let template_embs = views.iter().map(|v| template_embedding(v, adapter)).collect::<Result<Vec<_>>>()?;
    let scored = score_candidates(
        &candidates,
        query.grid,
        query.width,
        query.height,
        &template_embs,
        adapter,
        segmenter,
        cfg.scoring_mode,
    )?;
    let kept = scored.iter().map(|s| filter_candidates(s, cfg.delta)).collect::<Result<Vec<_>>>()?;
    let selected = aggregate_and_cluster(&kept, cfg.cluster_radius)?;

    let mut prompts = Vec::with_capacity(selected.clusters.len());
    let mut detections = Vec::new();
    for c in 0..selected.clusters.len() {
        let points = fps_select(&selected.cluster_points(c), cfg.prompt_budget)?;
        let pp = prompt_patches(query.grid, &points, query.width, query.height)?;
        let patches = segmenter.segment_patches(query.grid, &pp)?;
        prompts.push(points);
        let mask = query.grid.patches_to_mask(&patches, query.width, query.height);
        if mask.is_empty() {
            continue;
        }
        let emb = match region_embedding(query.grid, &mask, adapter) {
            Ok(e) => e,
            Err(L2gError::EmptyRegion) => continue,
            Err(e) => return Err(e),
        };
        let score = template_embs.iter().map(|t| emb.cosine(t)).fold(f64::NEG_INFINITY, f64::max);
        detections.push(Detection::new(query.name, instance_id, mask, score)?);
    }
    let detections = suppress_fragments(detections, cfg.nms_iou, cfg.nms_iou)?;
    Ok(DetectTrace { candidates, selected, prompts, detections })
}
