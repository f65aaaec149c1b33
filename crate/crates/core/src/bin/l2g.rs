use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use l2g_core::eval::{compute_ap, read_detections, read_ground_truth, write_detections};
use l2g_core::features::{read_feature_file, write_feature_file, FeatureProvider};
use l2g_core::library::{instances, noise_background, template_library};
use l2g_core::matching::TemplateView;
use l2g_core::pipeline::{
    detect_tiled, detect_traced, render_overlay, run_benchmark, run_k_sweep, CorpusConfig, Models, PipelineConfig,
    Query,
};
use l2g_core::raster::load_rgb;
use l2g_core::segmenter::{train_token, TokenMemory, TokenSample, TokenTrainConfig};
use l2g_core::selector::{raw_region, read_adapter, train_adapter, write_adapter, AdapterSample, AdapterTrainConfig};
use l2g_core::synth::{
    generate_training_set, load_backgrounds, load_template_dir, read_samples, save_backgrounds, save_template_dir,
    write_samples, BackgroundStore, SceneRequest, TemplateLibrary,
};
use l2g_core::{par, L2gError, ProceduralProvider, Result};

#[derive(Parser)]
#[command(name = "l2g", version, about = "Local-to-global novel instance detection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a procedural template library and background images.
    Library {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 12)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        backgrounds: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Compose synthetic training scenes from templates.
    Synth {
        #[arg(long)]
        templates: PathBuf,
        #[arg(long)]
        backgrounds: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        per_object: usize,
        /// single:no-overlap:overlap
        #[arg(long, default_value = "1:1:1")]
        ratio: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract a patch feature grid from an image.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        stride: u32,
        #[arg(long, default_value = "procedural")]
        provider: String,
    },
    /// Train the embedding adapter on synthetic scenes.
    TrainAdapter {
        /// Directory written by `synth`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-4)]
        lr: f64,
        #[arg(long, default_value_t = 96)]
        batch: usize,
        #[arg(long, default_value_t = 0.07)]
        tau: f64,
        #[arg(long, default_value_t = 8)]
        stride: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Enroll one instance: train its object token and add it to a memory file.
    TrainToken {
        /// Directory written by `synth`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        instance: String,
        #[arg(long)]
        memory: PathBuf,
        #[arg(long, default_value_t = 12)]
        epochs: usize,
        #[arg(long, default_value_t = 5e-3)]
        lr: f64,
        #[arg(long, default_value_t = 8)]
        stride: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Detect an instance in a query image.
    Detect {
        #[command(flatten)]
        run: RunArgs,
        /// Sliding-window inference.
        #[arg(long)]
        tiled: bool,
        /// Detections JSON; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mask AP of detections against ground truth.
    Eval {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Benchmark on the seeded synthetic corpus.
    Bench {
        /// Run all four adapter/token configurations.
        #[arg(long)]
        ablation: bool,
        /// Comma-separated template counts, e.g. 1,4,8,12,16.
        #[arg(long, value_delimiter = ',')]
        sweep_k: Option<Vec<usize>>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "bench_report.json")]
        out: PathBuf,
        #[arg(long)]
        timings: Option<PathBuf>,
    },
    /// Draw detections, candidate points and prompts onto the query image.
    Overlay {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    instance: String,
    #[arg(long)]
    templates: PathBuf,
    #[arg(long)]
    adapter: Option<PathBuf>,
    #[arg(long)]
    memory: Option<PathBuf>,
    /// Pipeline config JSON. Without it, the adapter and token are used
    /// exactly when their files are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Precomputed query features (L2GF) instead of extracting them.
    #[arg(long)]
    features: Option<PathBuf>,
}

struct Loaded {
    image: image::RgbImage,
    views: Vec<TemplateView>,
    adapter: Option<l2g_core::numerics::AdapterParams>,
    memory: Option<TokenMemory>,
    cfg: PipelineConfig,
}

fn read_config(path: &Path) -> Result<PipelineConfig> {
    PipelineConfig::from_json(&std::fs::read_to_string(path)?)
}

fn template_views(lib: &TemplateLibrary, id: &str, stride: u32) -> Result<Vec<TemplateView>> {
    let set = lib.get(id).ok_or_else(|| L2gError::UnknownInstance(id.to_string()))?;
    set.entries
        .iter()
        .map(|e| {
            Ok(TemplateView { view_index: e.view_index, grid: ProceduralProvider::default().extract(&e.image, stride)?, mask: e.mask.clone() })
        })
        .collect()
}

impl RunArgs {
    fn load(&self) -> Result<Loaded> {
        let cfg = match &self.config {
            Some(p) => read_config(p)?,
            None => PipelineConfig {
                use_adapter: self.adapter.is_some(),
                use_token: self.memory.is_some(),
                ..PipelineConfig::default()
            },
        };
        let lib = load_template_dir(&self.templates)?;
        Ok(Loaded {
            image: load_rgb(&self.image)?,
            views: template_views(&lib, &self.instance, cfg.stride)?,
            adapter: self.adapter.as_deref().map(read_adapter).transpose()?,
            memory: self.memory.as_deref().map(TokenMemory::load).transpose()?,
            cfg,
        })
    }

    fn image_name(&self) -> String {
        self.image.file_name().and_then(|n| n.to_str()).unwrap_or("query").to_string()
    }

    fn grid(&self, l: &Loaded) -> Result<l2g_core::FeatureGrid> {
        match &self.features {
            Some(p) => read_feature_file(p),
            None => ProceduralProvider::default().extract(&l.image, l.cfg.stride),
        }
    }
}

fn parse_ratio(s: &str) -> Result<[u32; 3]> {
    let parts: Vec<u32> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| L2gError::Config(format!("bad mode ratio `{s}`"))))
        .collect::<Result<_>>()?;
    parts.try_into().map_err(|_| L2gError::Config(format!("mode ratio `{s}` needs three parts")))
}

fn load_training(dir: &Path, stride: u32) -> Result<(Vec<l2g_core::synth::SynthSample>, Vec<l2g_core::FeatureGrid>)> {
    let samples = read_samples(dir)?;
    let grids = par::map(&samples, |s| ProceduralProvider::default().extract(&s.image, stride)).into_iter().collect::<Result<_>>()?;
    Ok((samples, grids))
}

fn run(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Library { out, instances: n, k, backgrounds, seed } => {
            let lib = template_library(&instances(n, seed), k)?;
            save_template_dir(&lib, &out.join("templates"))?;
            let mut store = BackgroundStore::new();
            for i in 0..backgrounds {
                store.insert(format!("noise_{i:03}.png"), noise_background(320, 240, seed.wrapping_mul(1000) + i));
            }
            save_backgrounds(&store, &out.join("backgrounds"))?;
            println!("wrote {} instances x {k} views and {backgrounds} backgrounds to {}", lib.len(), out.display());
        }
        Cmd::Synth { templates, backgrounds, out, per_object, ratio, seed } => {
            let lib = load_template_dir(&templates)?;
            let store = load_backgrounds(&backgrounds)?;
            let samples = generate_training_set(&lib, &store, per_object, parse_ratio(&ratio)?, seed, &SceneRequest::default())?;
            write_samples(&samples, &out)?;
            println!("wrote {} scenes to {}", samples.len(), out.display());
        }
        Cmd::Features { input, out, stride, provider } => {
            if provider != "procedural" {
                return Err(L2gError::Config(format!("unknown feature provider `{provider}`")));
            }
            let grid = ProceduralProvider::default().extract(&load_rgb(&input)?, stride)?;
            write_feature_file(&grid, &out)?;
            println!("{}x{} patches, dim {}", grid.rows(), grid.cols(), grid.dim());
        }
        Cmd::TrainAdapter { data, out, epochs, lr, batch, tau, stride, seed } => {
            let (scenes, grids) = load_training(&data, stride)?;
            let data: Vec<AdapterSample> = scenes
                .iter()
                .zip(&grids)
                .flat_map(|(s, g)| {
                    s.gt_masks.iter().filter_map(move |(id, m)| {
                        raw_region(g, m).ok().map(|raw| AdapterSample { instance: id.clone(), raw })
                    })
                })
                .collect();
            let cfg = AdapterTrainConfig { epochs, lr, batch_size: batch, tau, seed, ..Default::default() };
            let t = train_adapter(&data, &cfg)?;
            for (e, l) in t.epoch_losses.iter().enumerate() {
                println!("epoch {:>3}  loss {l:.6}", e + 1);
            }
            write_adapter(&t.adapter, &out)?;
        }
        Cmd::TrainToken { data, instance, memory, epochs, lr, stride, seed } => {
            let (scenes, grids) = load_training(&data, stride)?;
            let data: Vec<TokenSample> = scenes
                .iter()
                .zip(&grids)
                .filter_map(|(s, g)| s.gt_masks.get(&instance).map(|m| TokenSample { grid: g, gt_mask: m }))
                .collect();
            let mut mem = if memory.exists() { TokenMemory::load(&memory)? } else { TokenMemory::new() };
            let cfg = TokenTrainConfig { epochs, lr, seed, ..Default::default() };
            let token = train_token(&instance, &data, &cfg)?;
            if let Some(l) = token.loss_history.last() {
                println!("{instance}: final epoch loss {l:.6}");
            }
            mem.add(token);
            mem.save(&memory)?;
            println!("memory holds {} tokens", mem.len());
        }
        Cmd::Detect { run, tiled, out } => {
            let l = run.load()?;
            let models = Models { adapter: l.adapter.as_ref(), memory: l.memory.as_ref() };
            let name = run.image_name();
            let dets = if tiled {
                detect_tiled(&l.image, &name, &ProceduralProvider::default(), &run.instance, &l.views, models, &l.cfg)?
            } else {
                let grid = run.grid(&l)?;
                let q = Query { name: &name, grid: &grid, width: l.image.width() as usize, height: l.image.height() as usize };
                detect_traced(q, &run.instance, &l.views, models, &l.cfg)?.detections
            };
            for d in &dets {
                let verdict = if l2g_core::pipeline::accept(d, l.cfg.accept_threshold) { "accept" } else { "reject" };
                eprintln!("{}  score {:.4}  bbox {:?}  {verdict}", d.instance_id, d.score, d.bbox);
            }
            match out {
                Some(p) => write_detections(&dets, &p)?,
                None => {
                    let recs: Vec<l2g_core::eval::DetectionRecord> = dets.iter().map(Into::into).collect();
                    println!("{}", serde_json::to_string_pretty(&recs)?);
                }
            }
        }
        Cmd::Eval { detections, gt } => {
            let r = compute_ap(&read_detections(&detections)?, &read_ground_truth(&gt)?)?;
            println!("AP {:.4}  AP50 {:.4}  AP75 {:.4}", r.ap, r.ap50, r.ap75);
            for (id, ap) in &r.per_instance {
                println!("  {id:<12} {ap:.4}");
            }
        }
        Cmd::Bench { ablation, sweep_k, config, corpus, out, timings } => {
            let cfg = match config {
                Some(p) => read_config(&p)?,
                None => PipelineConfig::default(),
            };
            let cc: CorpusConfig = match corpus {
                Some(p) => serde_json::from_slice(&std::fs::read(&p)?)
                    .map_err(|e| L2gError::Config(format!("corpus config: {e}")))?,
                None => CorpusConfig::default(),
            };
            let configs = if ablation { cfg.ablation() } else { vec![("config".to_string(), cfg.clone())] };
            let (mut report, t) = run_benchmark(&cc, &configs, &ProceduralProvider::default())?;
            if let Some(ks) = sweep_k {
                report.k_sweep = run_k_sweep(&cc, &ks, &cfg, &ProceduralProvider::default())?;
            }
            for r in &report.results {
                println!("{:<14} AP {:.4}  AP50 {:.4}  AP75 {:.4}", r.name, r.ap.ap, r.ap.ap50, r.ap.ap75);
            }
            for p in &report.k_sweep {
                println!("K = {:<3} AP {:.4}  AP50 {:.4}  AP75 {:.4}", p.k, p.ap, p.ap50, p.ap75);
            }
            std::fs::write(&out, report.to_json()?)?;
            if let Some(p) = timings {
                std::fs::write(p, serde_json::to_string_pretty(&t)?)?;
            }
        }
        Cmd::Overlay { run, out } => {
            let l = run.load()?;
            let models = Models { adapter: l.adapter.as_ref(), memory: l.memory.as_ref() };
            let grid = run.grid(&l)?;
            let name = run.image_name();
            let q = Query { name: &name, grid: &grid, width: l.image.width() as usize, height: l.image.height() as usize };
            let trace = detect_traced(q, &run.instance, &l.views, models, &l.cfg)?;
            render_overlay(&l.image, &trace, l.cfg.accept_threshold).save(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match par::with_threads(par::threads_from_env(), || run(cli.cmd)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
