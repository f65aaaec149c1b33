use image::{Rgb, RgbImage};
use l2g_core::eval::{mask_iou, Detection};
use l2g_core::features::FeatureProvider;
use l2g_core::library::{instances, noise_background, Pattern};
use l2g_core::matching::TemplateView;
use l2g_core::pipeline::{
    accept, build_corpus, detect, detect_tiled, nms, Corpus, CorpusConfig, Models, PipelineConfig, Query,
    TrainedModels,
};
use l2g_core::{Mask, ProceduralProvider};

fn small_corpus() -> (Corpus, TrainedModels, CorpusConfig) {
    corpus_at(8)
}

fn corpus_at(stride: u32) -> (Corpus, TrainedModels, CorpusConfig) {
    let cc = CorpusConfig { n_instances: 4, synth_per_object: 20, n_queries: 4, ..CorpusConfig::default() };
    let corpus = build_corpus(&cc, &ProceduralProvider::default(), stride).unwrap();
    let models = corpus.train(&cc, true, true).unwrap();
    (corpus, models, cc)
}

/// Pastes template view `v` of `id` unchanged onto a noise background.
fn verbatim_scene(corpus: &Corpus, id: &str, v: usize, w: u32, h: u32, at: (u32, u32)) -> (RgbImage, Mask) {
    let entry = &corpus.templates[id].entries[v];
    let mut img = noise_background(w, h, 99);
    let mut gt = Mask::new(w as usize, h as usize);
    for p in entry.mask.pixels() {
        let (x, y) = (p.x as u32 + at.0, p.y as u32 + at.1);
        img.put_pixel(x, y, *entry.image.get_pixel(p.x as u32, p.y as u32));
        gt.set(x as usize, y as usize, true);
    }
    (img, gt)
}

fn run(
    img: &RgbImage,
    id: &str,
    views: &[TemplateView],
    models: &TrainedModels,
    cfg: &PipelineConfig,
) -> Vec<Detection> {
    let grid = ProceduralProvider::default().extract(img, cfg.stride).unwrap();
    let q = Query { name: "q", grid: &grid, width: img.width() as usize, height: img.height() as usize };
    let m = Models { adapter: models.adapter.as_ref(), memory: models.memory.as_ref() };
    detect(q, id, views, m, cfg).unwrap()
}

#[test]
fn verbatim_single_object_found_by_every_config() {
    let stride = 4;
    let (corpus, models, cc) = corpus_at(stride);
    // a plain-coloured front face, pasted on the patch grid
    let prism = instances(cc.n_instances, cc.seed)
        .into_iter()
        .find(|p| p.faces[0].pattern == Pattern::Solid)
        .expect("corpus has a solid-faced instance");
    let id = prism.id.as_str();
    let [bx, by, _, _] = corpus.templates[id].entries[0].mask.bbox().unwrap();
    let (img, gt) = verbatim_scene(&corpus, id, 0, 256, 192, (128 - bx, 64 - by));
    for (name, base) in PipelineConfig::default().ablation() {
        let cfg = PipelineConfig { stride, cluster_radius: 2.0 * stride as f64, ..base };
        let dets = run(&img, id, &corpus.views[id], &models, &cfg);
        let accepted: Vec<&Detection> = dets.iter().filter(|d| accept(d, cfg.accept_threshold)).collect();
        assert_eq!(accepted.len(), 1, "{name}: {} accepted detections", accepted.len());
        let iou = mask_iou(&accepted[0].mask, &gt).unwrap();
        assert!(iou >= 0.9, "{name}: IoU {iou:.3}");
    }
}

#[test]
fn plain_background_is_rejected() {
    let (corpus, models, _) = small_corpus();
    let img = RgbImage::from_pixel(256, 192, Rgb([128, 128, 128]));
    let cfg = PipelineConfig::default();
    for det in run(&img, "obj00", &corpus.views["obj00"], &models, &cfg) {
        assert!(!accept(&det, cfg.accept_threshold), "score {}", det.score);
    }
}

#[test]
fn same_inputs_same_detections() {
    let (corpus, models, _) = small_corpus();
    let (img, _) = verbatim_scene(&corpus, "obj02", 3, 256, 192, (40, 30));
    let cfg = PipelineConfig::default();
    let a = run(&img, "obj02", &corpus.views["obj02"], &models, &cfg);
    let b = run(&img, "obj02", &corpus.views["obj02"], &models, &cfg);
    let key = |d: &Vec<Detection>| d.iter().map(|d| (d.mask.clone(), d.score.to_bits())).collect::<Vec<_>>();
    assert_eq!(key(&a), key(&b));
}

#[test]
fn tiled_on_one_window_equals_detect() {
    let (corpus, models, _) = small_corpus();
    let (img, _) = verbatim_scene(&corpus, "obj01", 2, 256, 192, (100, 50));
    let cfg = PipelineConfig::default();
    let m = Models { adapter: models.adapter.as_ref(), memory: models.memory.as_ref() };
    let views = &corpus.views["obj01"];
    let tiled = detect_tiled(&img, "q", &ProceduralProvider::default(), "obj01", views, m, &cfg).unwrap();
    let plain = run(&img, "obj01", views, &models, &cfg);
    assert_eq!(tiled.len(), plain.len());
    for (a, b) in tiled.iter().zip(&plain) {
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.score.to_bits(), b.score.to_bits());
    }
}

#[test]
fn tiled_maps_window_masks_to_image_coordinates() {
    let (corpus, models, _) = small_corpus();
    let id = "obj03";
    let (small, _) = verbatim_scene(&corpus, id, 0, 256, 192, (64, 48));
    let single = run(&small, id, &corpus.views[id], &models, &PipelineConfig::default());

    // same content as the top-left window of a larger, otherwise plain image
    let mut big = RgbImage::from_pixel(448, 192, Rgb([128, 128, 128]));
    image::imageops::replace(&mut big, &small, 0, 0);
    let cfg = PipelineConfig { window_overlap: (64, 0), ..PipelineConfig::default() };
    let m = Models { adapter: models.adapter.as_ref(), memory: models.memory.as_ref() };
    let tiled = detect_tiled(&big, "q", &ProceduralProvider::default(), id, &corpus.views[id], m, &cfg).unwrap();
    let best = tiled.iter().max_by(|a, b| a.score.total_cmp(&b.score)).unwrap();
    let expected = single[0].mask.placed(448, 192, 0, 0);
    assert!(mask_iou(&best.mask, &expected).unwrap() >= 0.9);
    for d in &tiled {
        assert_eq!(d.mask.dims(), (448, 192));
    }
}

#[test]
fn overlapping_duplicates_merge_to_one() {
    let m = |x0: usize, x1: usize| Mask::from_fn(64, 16, |x, _| x >= x0 && x < x1);
    let dets = vec![
        Detection::new("q", "a", m(10, 40), 0.8).unwrap(),
        Detection::new("q", "a", m(12, 40), 0.9).unwrap(),
        Detection::new("q", "a", m(44, 60), 0.5).unwrap(),
    ];
    let kept = nms(dets, 0.5).unwrap();
    let scores: Vec<f64> = kept.iter().map(|d| d.score).collect();
    assert_eq!(scores, vec![0.9, 0.5]);
}
