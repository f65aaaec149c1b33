use std::collections::BTreeMap;
use std::time::Instant;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{detect, Models, PipelineConfig, Query};
use crate::error::{L2gError, Result};
use crate::eval::{compute_ap, ApSummary, Detection, DetectionRecord, GroundTruth};
use crate::features::{FeatureGrid, FeatureProvider};
use crate::library::{instances, query_library, template_library};
use crate::matching::TemplateView;
use crate::numerics::AdapterParams;
use crate::par;
use crate::raster::Mask;
use crate::segmenter::{train_token, TokenMemory, TokenSample, TokenTrainConfig};
use crate::selector::{raw_region, train_adapter, AdapterSample, AdapterTrainConfig};
use crate::synth::{
    composite_scene, generate_training_set, sample_scene_spec, scene_rng, AugmentRanges, BackgroundStore, SceneMode,
    SceneRequest, SynthSample, TemplateLibrary,
};

const QUERY_STREAM: u64 = 0x5155_4552_5900_0000;
const QUERY_VIEWS: usize = 12;

/// The seeded desk corpus: procedural instances, synthetic training scenes
/// and held-out query scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_instances: usize,
    pub k_templates: usize,
    pub synth_per_object: usize,
    pub n_queries: usize,
    pub canvas: (u32, u32),
    pub n_backgrounds: u64,
    pub seed: u64,
    pub adapter_epochs: usize,
    pub adapter_lr: f64,
    pub token_epochs: usize,
    pub token_lr: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_instances: 10,
            k_templates: 12,
            synth_per_object: 50,
            n_queries: 50,
            canvas: (256, 192),
            n_backgrounds: 8,
            seed: 7,
            adapter_epochs: 20,
            adapter_lr: 5e-4,
            token_epochs: 12,
            token_lr: 5e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryScene {
    pub name: String,
    pub image: RgbImage,
    pub grid: FeatureGrid,
    pub target: String,
    pub gt: Mask,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub templates: TemplateLibrary,
    pub views: BTreeMap<String, Vec<TemplateView>>,
    pub training: Vec<SynthSample>,
    pub training_grids: Vec<FeatureGrid>,
    pub queries: Vec<QueryScene>,
}

fn featurize(
    provider: &dyn FeatureProvider,
    templates: &TemplateLibrary,
    stride: u32,
) -> Result<BTreeMap<String, Vec<TemplateView>>> {
    templates
        .iter()
        .map(|(id, set)| {
            let views = set
                .entries
                .iter()
                .map(|e| {
                    Ok(TemplateView { view_index: e.view_index, grid: provider.extract(&e.image, stride)?, mask: e.mask.clone() })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((id.clone(), views))
        })
        .collect()
}

fn background_seeds(cc: &CorpusConfig, offset: u64) -> BackgroundStore {
    BackgroundStore::with_procedural((0..cc.n_backgrounds).map(|i| cc.seed.wrapping_mul(1000).wrapping_add(offset + i)))
}

fn query_scenes(cc: &CorpusConfig, provider: &dyn FeatureProvider, stride: u32) -> Result<Vec<QueryScene>> {
    let prisms = instances(cc.n_instances, cc.seed);
    let library = query_library(&prisms, QUERY_VIEWS)?;
    let ids: Vec<String> = library.keys().cloned().collect();
    let store = background_seeds(cc, 500);
    let names = store.names();
    let req = SceneRequest {
        canvas: cc.canvas,
        ranges: AugmentRanges { scale: (0.8, 1.2), rotation: (-15.0, 15.0), blur: (0.0, 1.0) },
        ..SceneRequest::default()
    };
    let idx: Vec<usize> = (0..cc.n_queries).collect();
    let scenes = par::map(&idx, |&q| -> Result<QueryScene> {
        let target = &ids[q % ids.len()];
        let mode = SceneMode::ALL[(q / ids.len()) % 3];
        let mut rng = scene_rng(cc.seed ^ QUERY_STREAM, q as u64);
        let mut last = None;
        for _ in 0..10 {
            let sample = sample_scene_spec(&mut rng, &library, &names, target, mode, &req, cc.seed)
                .and_then(|spec| composite_scene(&spec, &store, &library));
            match sample {
                Ok(s) => {
                    let grid = provider.extract(&s.image, stride)?;
                    return Ok(QueryScene {
                        name: format!("query_{q:03}"),
                        gt: s.gt_masks[target].clone(),
                        image: s.image,
                        grid,
                        target: target.clone(),
                    });
                }
                Err(e @ L2gError::Generation(_)) => last = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| L2gError::Generation("query generation failed".into())))
    });
    scenes.into_iter().collect()
}

pub fn build_corpus(cc: &CorpusConfig, provider: &dyn FeatureProvider, stride: u32) -> Result<Corpus> {
    if cc.n_instances < 2 {
        return Err(L2gError::Config("the corpus needs at least two instances".into()));
    }
    let prisms = instances(cc.n_instances, cc.seed);
    let templates = template_library(&prisms, cc.k_templates)?;
    let views = featurize(provider, &templates, stride)?;
    let req = SceneRequest { canvas: cc.canvas, ..SceneRequest::default() };
    let training =
        generate_training_set(&templates, &background_seeds(cc, 0), cc.synth_per_object, [1, 1, 1], cc.seed, &req)?;
    let training_grids =
        par::map(&training, |s| provider.extract(&s.image, stride)).into_iter().collect::<Result<Vec<_>>>()?;
    let queries = query_scenes(cc, provider, stride)?;
    Ok(Corpus { templates, views, training, training_grids, queries })
}

#[derive(Debug, Clone, Default)]
pub struct TrainedModels {
    pub adapter: Option<AdapterParams>,
    pub adapter_losses: Vec<f64>,
    pub memory: Option<TokenMemory>,
}

impl Corpus {
    /// Region vectors of every visible instance in the training scenes,
    /// plus every template view.
    pub fn adapter_samples(&self) -> Vec<AdapterSample> {
        let mut out = Vec::new();
        for (s, grid) in self.training.iter().zip(&self.training_grids) {
            for (id, m) in &s.gt_masks {
                if let Ok(raw) = raw_region(grid, m) {
                    out.push(AdapterSample { instance: id.clone(), raw });
                }
            }
        }
        for (id, views) in &self.views {
            for v in views {
                if let Ok(raw) = raw_region(&v.grid, &v.mask) {
                    out.push(AdapterSample { instance: id.clone(), raw });
                }
            }
        }
        out
    }

    pub fn train_adapter(&self, cc: &CorpusConfig) -> Result<(AdapterParams, Vec<f64>)> {
        let cfg = AdapterTrainConfig { epochs: cc.adapter_epochs, lr: cc.adapter_lr, seed: cc.seed, ..Default::default() };
        let t = train_adapter(&self.adapter_samples(), &cfg)?;
        Ok((t.adapter, t.epoch_losses))
    }

    /// Trains one token per instance, in id order, into a fresh memory.
    pub fn train_tokens(&self, cc: &CorpusConfig) -> Result<TokenMemory> {
        let ids: Vec<&String> = self.templates.keys().collect();
        let tokens = par::map(&ids, |id| {
            let samples: Vec<TokenSample> = self
                .training
                .iter()
                .zip(&self.training_grids)
                .filter_map(|(s, g)| s.gt_masks.get(*id).map(|m| TokenSample { grid: g, gt_mask: m }))
                .collect();
            let cfg = TokenTrainConfig { epochs: cc.token_epochs, lr: cc.token_lr, seed: cc.seed, ..Default::default() };
            train_token(id, &samples, &cfg)
        });
        let mut memory = TokenMemory::new();
        for t in tokens {
            memory.add(t?);
        }
        Ok(memory)
    }

    pub fn train(&self, cc: &CorpusConfig, need_adapter: bool, need_token: bool) -> Result<TrainedModels> {
        let mut m = TrainedModels::default();
        if need_adapter {
            let (a, l) = self.train_adapter(cc)?;
            m.adapter = Some(a);
            m.adapter_losses = l;
        }
        if need_token {
            m.memory = Some(self.train_tokens(cc)?);
        }
        Ok(m)
    }

    pub fn ground_truth(&self) -> Result<Vec<GroundTruth>> {
        self.queries.iter().map(|q| GroundTruth::new(q.name.clone(), q.target.clone(), q.gt.clone())).collect()
    }

    /// Runs `cfg` on every query, in query order.
    pub fn detect_all(&self, models: &TrainedModels, cfg: &PipelineConfig) -> Result<Vec<Detection>> {
        let m = Models { adapter: models.adapter.as_ref(), memory: models.memory.as_ref() };
        let per_query = par::map(&self.queries, |q| {
            let views = self.views.get(&q.target).ok_or_else(|| L2gError::UnknownInstance(q.target.clone()))?;
            let query = Query { name: &q.name, grid: &q.grid, width: q.image.width() as usize, height: q.image.height() as usize };
            detect(query, &q.target, views, m, cfg)
        });
        let mut all = Vec::new();
        for d in per_query {
            all.extend(d?);
        }
        Ok(all)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub name: String,
    pub config: PipelineConfig,
    pub ap: ApSummary,
    pub detections: Vec<DetectionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSweepPoint {
    pub k: usize,
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
}

/// Reproducible benchmark output. Wall-clock timings are kept apart in
/// [`Timings`] so the report bytes only depend on inputs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub corpus: CorpusConfig,
    pub adapter_epoch_losses: Vec<f64>,
    pub results: Vec<ConfigResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k_sweep: Vec<KSweepPoint>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn result(&self, name: &str) -> Option<&ConfigResult> {
        self.results.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

impl Timings {
    fn record(&mut self, key: impl Into<String>, start: Instant) {
        self.seconds.insert(key.into(), start.elapsed().as_secs_f64());
    }
}

fn common_stride(configs: &[(String, PipelineConfig)]) -> Result<u32> {
    let stride = configs.first().ok_or_else(|| L2gError::Config("no pipeline configs given".into()))?.1.stride;
    if configs.iter().any(|(_, c)| c.stride != stride) {
        return Err(L2gError::Config("all benchmark configs must share one stride".into()));
    }
    for (name, c) in configs {
        c.validate().map_err(|e| L2gError::Config(format!("config `{name}`: {e}")))?;
    }
    Ok(stride)
}

/// Builds the corpus, trains what the configs need (once) and evaluates
/// every config on the query scenes.
pub fn run_benchmark(
    cc: &CorpusConfig,
    configs: &[(String, PipelineConfig)],
    provider: &dyn FeatureProvider,
) -> Result<(BenchmarkReport, Timings)> {
    let stride = common_stride(configs)?;
    let mut timings = Timings::default();
    let t = Instant::now();
    let corpus = build_corpus(cc, provider, stride)?;
    timings.record("corpus", t);

    let t = Instant::now();
    let models = corpus.train(
        cc,
        configs.iter().any(|(_, c)| c.use_adapter),
        configs.iter().any(|(_, c)| c.use_token),
    )?;
    timings.record("training", t);

    let gts = corpus.ground_truth()?;
    let mut results = Vec::with_capacity(configs.len());
    for (name, cfg) in configs {
        let t = Instant::now();
        let dets = corpus.detect_all(&models, cfg).map_err(|e| match e {
            L2gError::Config(m) => L2gError::Config(format!("config `{name}`: {m}")),
            other => other,
        })?;
        let ap = compute_ap(&dets, &gts)?;
        timings.record(format!("detect/{name}"), t);
        results.push(ConfigResult {
            name: name.clone(),
            config: cfg.clone(),
            ap,
            detections: dets.iter().map(Into::into).collect(),
        });
    }
    let report =
        BenchmarkReport { corpus: cc.clone(), adapter_epoch_losses: models.adapter_losses, results, k_sweep: Vec::new() };
    Ok((report, timings))
}

/// AP of `cfg` when only `k` template views per instance are available,
/// for every `k` in `ks`. Training reruns for each `k`; the query scenes do
/// not change.
pub fn run_k_sweep(
    cc: &CorpusConfig,
    ks: &[usize],
    cfg: &PipelineConfig,
    provider: &dyn FeatureProvider,
) -> Result<Vec<KSweepPoint>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        if k == 0 {
            return Err(L2gError::Config("K must be >= 1".into()));
        }
        let cck = CorpusConfig { k_templates: k, ..cc.clone() };
        let corpus = build_corpus(&cck, provider, cfg.stride)?;
        let models = corpus.train(&cck, cfg.use_adapter, cfg.use_token)?;
        let cfgk = PipelineConfig { k_templates: k, ..cfg.clone() };
        let ap = compute_ap(&corpus.detect_all(&models, &cfgk)?, &corpus.ground_truth()?)?;
        out.push(KSweepPoint { k, ap: ap.ap, ap50: ap.ap50, ap75: ap.ap75 });
    }
    Ok(out)
}
