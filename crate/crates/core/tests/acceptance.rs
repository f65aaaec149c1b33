//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use l2g_core::eval::{compute_ap, Detection, GroundTruth};
use l2g_core::features::{read_feature_file, sample_template_patches, write_feature_file};
use l2g_core::matching::{generate_candidates, CandidatePoint, TemplateView};
use l2g_core::numerics::{finite_diff_grad, relative_error, AdapterParams};
use l2g_core::pipeline::{build_corpus, run_benchmark, run_k_sweep, CorpusConfig, PipelineConfig};
use l2g_core::segmenter::{
    hybrid_loss, soft_mask, token_gradient, train_token, DecoderGains, LossWeights, ObjectToken, TokenMemory,
    TokenSample, TokenTrainConfig,
};
use l2g_core::selector::{
    decode_adapter, encode_adapter, filter_candidates, read_adapter, region_embedding, template_embedding,
    train_adapter, tuple_objective, AdapterTrainConfig, ScoredCandidate,
};
use l2g_core::{par, FeatureGrid, L2gError, Mask, PatchIndex, Pixel, ProceduralProvider, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn c1_gradients() -> Result<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_adapter = 0.0f64;
    for _ in 0..100 {
        let dim = rng.gen_range(3..8);
        let hidden = rng.gen_range(2..8);
        let mut adapter = AdapterParams::random(dim, hidden, 0.2, &mut rng);
        for b in adapter.b1.iter_mut().chain(adapter.b2.iter_mut()) {
            *b = rng.gen_range(-0.3..0.3);
        }
        let anchor = rand_vec(&mut rng, dim);
        let positive = rand_vec(&mut rng, dim);
        let negatives: Vec<Vec<f64>> = (0..rng.gen_range(1..4)).map(|_| rand_vec(&mut rng, dim)).collect();
        let tau = rng.gen_range(0.07..0.5);
        let (_, grad) = tuple_objective(&adapter, &anchor, &positive, &negatives, tau)?;
        let base = adapter.clone();
        let numeric = finite_diff_grad(
            |flat| {
                let mut p = base.clone();
                p.set_flat(flat)?;
                Ok(tuple_objective(&p, &anchor, &positive, &negatives, tau)?.0)
            },
            &adapter.to_flat(),
            1e-5,
        )?;
        worst_adapter = worst_adapter.max(relative_error(&grad.to_flat(), &numeric));
    }

    let mut worst_token = 0.0f64;
    let gains = DecoderGains::default();
    let weights = LossWeights::default();
    for _ in 0..100 {
        let rows = rng.gen_range(2..6);
        let cols = rng.gen_range(2..6);
        let dim = rng.gen_range(3..8);
        let data: Vec<f32> = (0..rows * cols * dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        let grid = FeatureGrid::new(rows, cols, dim, 4, (0, 0), data)?;
        let prompts: Vec<usize> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..rows * cols)).collect();
        let gt: Vec<bool> = (0..rows * cols).map(|_| rng.gen_bool(0.4)).collect();
        let token = rand_vec(&mut rng, dim);
        let f = |t: &[f64]| -> Result<f64> {
            let soft = soft_mask(&grid, &prompts, t, &gains)?;
            Ok(hybrid_loss(&soft.probs, &gt, &weights)?.total)
        };
        let soft = soft_mask(&grid, &prompts, &token, &gains)?;
        let loss = hybrid_loss(&soft.probs, &gt, &weights)?;
        let analytic = token_gradient(&grid, &soft.probs, &loss.grad, &token, &gains);
        let numeric = finite_diff_grad(f, &token, 1e-5)?;
        worst_token = worst_token.max(relative_error(&analytic, &numeric));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_adapter <= 1e-4 && worst_token <= 1e-4 && secs < 30.0,
        format!(
            "100+100 draws, worst rel err adapter {worst_adapter:.2e}, token {worst_token:.2e}, {secs:.2}s"
        ),
    )
}

fn scored(score: f64) -> ScoredCandidate {
    ScoredCandidate {
        candidate: CandidatePoint {
            pixel: Pixel::new(0, 0),
            template_view: 0,
            template_patch: PatchIndex { row: 0, col: 0 },
            query_patch: PatchIndex { row: 0, col: 0 },
            match_sim: 0.0,
        },
        probe_mask: Mask::new(1, 1),
        score,
    }
}

fn c2_filter() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..20);
        // coarse grid of values so that ties and near-delta gaps occur
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..40) as f64 / 40.0).collect();
        let list: Vec<ScoredCandidate> = scores.iter().map(|&s| scored(s)).collect();
        let d1 = rng.gen_range(1..20) as f64 / 100.0;
        let d2 = d1 + rng.gen_range(1..20) as f64 / 100.0;
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut ok = true;
        let mut prev: Option<Vec<usize>> = None;
        for delta in [d1, d2] {
            // filtering keeps input order, so the survivors' scores identify them
            let kept: Vec<f64> = filter_candidates(&list, delta)?.iter().map(|c| c.score).collect();
            let expected: Vec<usize> = (0..n).filter(|&i| max - scores[i] < delta).collect();
            ok &= kept == expected.iter().map(|&i| scores[i]).collect::<Vec<_>>();
            ok &= kept.contains(&max);
            if let Some(p) = &prev {
                ok &= p.iter().all(|i| expected.contains(i));
            }
            prev = Some(expected);
        }
        failures += (!ok) as usize;
    }
    outcome(failures == 0, format!("1000 lists, {failures} mismatches"))
}

/// Exact comparison of `dot(a, b) / |b|` for integer vectors.
fn exact_better(a: &[i64], b1: &[i64], b2: &[i64]) -> bool {
    let d1: i64 = a.iter().zip(b1).map(|(x, y)| x * y).sum();
    let d2: i64 = a.iter().zip(b2).map(|(x, y)| x * y).sum();
    let n1: i64 = b1.iter().map(|x| x * x).sum();
    let n2: i64 = b2.iter().map(|x| x * x).sum();
    // d1/sqrt(n1) > d2/sqrt(n2)
    match (d1.signum(), d2.signum()) {
        (s1, s2) if s1 != s2 => s1 > s2,
        (0, 0) => false,
        (1, _) => (d1 as i128 * d1 as i128) * n2 as i128 > (d2 as i128 * d2 as i128) * n1 as i128,
        _ => (d1 as i128 * d1 as i128) * (n2 as i128) < (d2 as i128 * d2 as i128) * (n1 as i128),
    }
}

fn c3_matching() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let dim = 4;
    let stride = 4u32;
    let mut failures = 0;
    let mut compared = 0;
    for _ in 0..100 {
        let palette: Vec<Vec<i64>> = (0..5).map(|_| (0..dim).map(|_| rng.gen_range(-3..4)).collect()).collect();
        let palette: Vec<Vec<i64>> =
            palette.into_iter().map(|v| if v.iter().all(|&x| x == 0) { vec![1, 0, 0, 0] } else { v }).collect();
        let random_grid = |rng: &mut ChaCha8Rng| -> (usize, usize, Vec<Vec<i64>>) {
            let rows = rng.gen_range(1..=8);
            let cols = rng.gen_range(1..=8);
            let cells = (0..rows * cols).map(|_| palette[rng.gen_range(0..palette.len())].clone()).collect();
            (rows, cols, cells)
        };
        let to_grid = |rows: usize, cols: usize, cells: &[Vec<i64>]| {
            FeatureGrid::new(rows, cols, dim, stride, (0, 0), cells.concat().iter().map(|&v| v as f32).collect())
        };
        let (qr, qc, qcells) = random_grid(&mut rng);
        let query = to_grid(qr, qc, &qcells)?;
        let k = rng.gen_range(1..4);
        let mut views = Vec::new();
        let mut tcells = Vec::new();
        for v in 0..k {
            let (tr, tc, cells) = random_grid(&mut rng);
            let w = tc * stride as usize;
            let h = tr * stride as usize;
            let x0 = rng.gen_range(0..w / 2 + 1);
            let y0 = rng.gen_range(0..h / 2 + 1);
            let mask = Mask::from_fn(w, h, |x, y| x >= x0 && y >= y0);
            views.push(TemplateView { view_index: v, grid: to_grid(tr, tc, &cells)?, mask });
            tcells.push((tc, cells));
        }
        let s = rng.gen_range(1..6);
        let got = generate_candidates(&views, &query, s)?;
        let mut ok = got.by_template.len() == k;
        for (v, (tc, cells)) in views.iter().zip(&tcells) {
            let picks = sample_template_patches(&v.grid, &v.mask, s)?;
            let list = &got.by_template[v.view_index];
            ok &= list.len() == picks.len();
            for (p, cand) in picks.iter().zip(list) {
                let feat = &cells[p.row * tc + p.col];
                let mut best = 0;
                for j in 1..qcells.len() {
                    if exact_better(feat, &qcells[j], &qcells[best]) {
                        best = j;
                    }
                }
                compared += 1;
                ok &= cand.template_patch == *p
                    && cand.query_patch == PatchIndex { row: best / qc, col: best % qc }
                    && cand.template_view == v.view_index;
            }
        }
        failures += (!ok) as usize;
    }
    outcome(failures == 0, format!("100 grids, {compared} matches compared, {failures} mismatching grids"))
}

/// Independent AP: per instance and threshold, match in ranked order, then
/// sum max-precision-to-the-right over true-positive ranks.
fn oracle_ap(dets: &[(usize, usize, Vec<bool>, f64)], gts: &[(usize, usize, Vec<bool>)]) -> (f64, [f64; 10]) {
    let iou = |a: &[bool], b: &[bool]| {
        let i = a.iter().zip(b).filter(|(x, y)| **x && **y).count() as f64;
        let u = a.iter().zip(b).filter(|(x, y)| **x || **y).count() as f64;
        if u == 0.0 {
            0.0
        } else {
            i / u
        }
    };
    let mut ids: Vec<usize> = gts.iter().map(|g| g.1).collect();
    ids.sort();
    ids.dedup();
    let mut per_thr = [0.0; 10];
    for (ti, thr) in (0..10).map(|i| (i, (50 + 5 * i) as f64 / 100.0)) {
        let mut sum = 0.0;
        for &id in &ids {
            let g: Vec<_> = gts.iter().filter(|g| g.1 == id).collect();
            let mut d: Vec<_> = dets.iter().filter(|d| d.1 == id).collect();
            d.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap());
            let mut used = vec![false; g.len()];
            let mut tp = Vec::new();
            for det in &d {
                let mut best: Option<(usize, f64)> = None;
                for (gi, gt) in g.iter().enumerate() {
                    if used[gi] || gt.0 != det.0 {
                        continue;
                    }
                    let v = iou(&det.2, &gt.2);
                    if v >= thr && best.map_or(true, |(_, b)| v > b) {
                        best = Some((gi, v));
                    }
                }
                if let Some((gi, _)) = best {
                    used[gi] = true;
                }
                tp.push(best.is_some());
            }
            let mut ap = 0.0;
            let mut hits = 0;
            let prec: Vec<f64> = tp
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    hits += t as usize;
                    hits as f64 / (i + 1) as f64
                })
                .collect();
            for k in 0..tp.len() {
                if tp[k] {
                    let best_right = prec[k..].iter().cloned().fold(0.0, f64::max);
                    ap += best_right / g.len() as f64;
                }
            }
            sum += ap;
        }
        per_thr[ti] = sum / ids.len() as f64;
    }
    (per_thr.iter().sum::<f64>() / 10.0, per_thr)
}

const AP_LEN: usize = 20;

fn interval(a: usize, b: usize) -> Vec<bool> {
    (0..AP_LEN).map(|x| x >= a && x < b).collect()
}

fn run_ap_case(dets: &[(usize, usize, Vec<bool>, f64)], gts: &[(usize, usize, Vec<bool>)]) -> Result<f64> {
    let to_mask = |v: &Vec<bool>| Mask::from_vec(AP_LEN, 1, v.clone());
    let d = dets
        .iter()
        .map(|(img, id, m, s)| Detection::new(format!("img{img}"), format!("id{id}"), to_mask(m)?, *s))
        .collect::<Result<Vec<_>>>()?;
    let g = gts
        .iter()
        .map(|(img, id, m)| GroundTruth::new(format!("img{img}"), format!("id{id}"), to_mask(m)?))
        .collect::<Result<Vec<_>>>()?;
    let got = compute_ap(&d, &g)?;
    let (ap, per) = oracle_ap(dets, gts);
    let mut err = (got.ap - ap).abs();
    for (a, b) in got.per_threshold.iter().zip(per) {
        err = err.max((a - b).abs());
    }
    Ok(err)
}

fn c4_ap() -> Result<Outcome> {
    // gt shapes and detection shapes with IoUs spread across the thresholds
    let gt_shapes = [interval(0, 10), interval(10, 20), interval(4, 14)];
    let det_shapes =
        [interval(0, 10), interval(1, 10), interval(2, 10), interval(0, 7), interval(10, 16), interval(3, 14)];
    let mut worst = 0.0f64;
    let mut cases = 0usize;
    for n_gt in 1..=3usize {
        for gsel in 0..3usize.pow(n_gt as u32) {
            let gts: Vec<_> = (0..n_gt)
                .map(|i| (0usize, 0usize, gt_shapes[(gsel / 3usize.pow(i as u32)) % 3].clone()))
                .collect();
            for n_det in 0..=3usize {
                for dsel in 0..6usize.pow(n_det as u32) {
                    let dets: Vec<_> = (0..n_det)
                        .map(|i| {
                            let shape = det_shapes[(dsel / 6usize.pow(i as u32)) % 6].clone();
                            (0usize, 0usize, shape, 1.0 - i as f64 * 0.1)
                        })
                        .collect();
                    worst = worst.max(run_ap_case(&dets, &gts)?);
                    cases += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for _ in 0..3000 {
        let n_gt = rng.gen_range(1..=5);
        let n_det = rng.gen_range(0..=5);
        let shape = |rng: &mut ChaCha8Rng| {
            let a = rng.gen_range(0..AP_LEN - 1);
            let b = rng.gen_range(a + 1..=AP_LEN);
            interval(a, b)
        };
        let gts: Vec<_> = (0..n_gt).map(|_| (rng.gen_range(0..2), rng.gen_range(0..2), shape(&mut rng))).collect();
        let dets: Vec<_> = (0..n_det)
            .map(|_| (rng.gen_range(0..2), rng.gen_range(0..2), shape(&mut rng), rng.gen_range(0..1000) as f64))
            .collect();
        // equal scores would make the ranking depend on the sort's tie rule
        let mut s: Vec<f64> = dets.iter().map(|d| d.3).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        if s.len() != dets.len() {
            continue;
        }
        worst = worst.max(run_ap_case(&dets, &gts)?);
        cases += 1;
    }

    // IoU 0.62: 31 shared pixels out of a 50 pixel union
    let gt = Mask::from_fn(50, 1, |x, _| x < 40);
    let det = Mask::from_fn(50, 1, |x, _| x >= 9);
    let s = compute_ap(&[Detection::new("a", "o", det, 1.0)?], &[GroundTruth::new("a", "o", gt)?])?;
    let exact = s.ap == 0.3 && s.ap50 == 1.0 && s.ap75 == 0.0;
    outcome(
        worst <= 1e-9 && exact,
        format!(
            "{cases} cases, max |dAP| {worst:.1e}; IoU 0.62 case AP {} AP50 {} AP75 {}",
            s.ap, s.ap50, s.ap75
        ),
    )
}

fn c5_ablation() -> Result<Outcome> {
    let start = Instant::now();
    let cc = CorpusConfig::default();
    let (report, _) = par::with_threads(Some(1), || {
        run_benchmark(&cc, &PipelineConfig::default().ablation(), &ProceduralProvider::default())
    })?;
    let ap = |n: &str| report.result(n).map(|r| r.ap.ap).unwrap_or(f64::NAN);
    let (none, adapter, token, both) = (ap("none"), ap("adapter"), ap("token"), ap("adapter+token"));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        both >= none + 0.02 && both >= adapter - 0.01 && both >= token - 0.01 && secs < 600.0,
        format!(
            "AP none {none:.4}, adapter {adapter:.4}, token {token:.4}, adapter+token {both:.4}; {secs:.1}s on 1 thread"
        ),
    )
}

fn c6_isolation() -> Result<Outcome> {
    let cc = CorpusConfig { n_instances: 4, synth_per_object: 10, n_queries: 4, ..CorpusConfig::default() };
    let corpus = build_corpus(&cc, &ProceduralProvider::default(), 8)?;
    let ids: Vec<String> = corpus.templates.keys().cloned().collect();
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("tokens.l2gt");
    let train = |id: &str| -> Result<ObjectToken> {
        let samples: Vec<TokenSample> = corpus
            .training
            .iter()
            .zip(&corpus.training_grids)
            .filter_map(|(s, g)| s.gt_masks.get(id).map(|m| TokenSample { grid: g, gt_mask: m }))
            .collect();
        train_token(id, &samples, &TokenTrainConfig { epochs: 3, seed: 5, ..Default::default() })
    };
    let mut memory = TokenMemory::new();
    memory.add(train(&ids[0])?);
    memory.save(&path)?;
    let mut ok = true;
    for id in &ids[1..] {
        let mut loaded = TokenMemory::load(&path)?;
        let before: BTreeMap<String, Vec<u8>> =
            loaded.ids().map(|i| (i.to_string(), loaded.entry_bytes(i).unwrap())).collect();
        loaded.add(train(id)?);
        loaded.save(&path)?;
        let after = TokenMemory::load(&path)?;
        for (prev, bytes) in &before {
            ok &= after.entry_bytes(prev).as_ref() == Some(bytes);
        }
        ok &= after.get(id).is_some();
    }
    outcome(ok, format!("3 sequential enrollments after {}, stored tokens unchanged: {ok}", ids[0]))
}

fn c7_determinism() -> Result<Outcome> {
    let cc = CorpusConfig::default();
    let configs = PipelineConfig::default().ablation();
    let run = |threads| {
        par::with_threads(Some(threads), || run_benchmark(&cc, &configs, &ProceduralProvider::default()))
            .and_then(|(r, _)| r.to_json())
    };
    let a = run(1)?;
    let b = run(4)?;
    let c = run(4)?;
    outcome(a == b && b == c, format!("report JSON {} bytes, identical across 1/4/4 threads: {}", a.len(), a == b && b == c))
}

fn c8_adapter() -> Result<Outcome> {
    let cc = CorpusConfig { n_instances: 5, synth_per_object: 500, ..CorpusConfig::default() };
    let corpus = build_corpus(&cc, &ProceduralProvider::default(), 8)?;
    let cfg = AdapterTrainConfig { epochs: cc.adapter_epochs, lr: cc.adapter_lr, seed: cc.seed, ..Default::default() };
    let t = train_adapter(&corpus.adapter_samples(), &cfg)?;
    let first = t.epoch_losses[0];
    let last = *t.epoch_losses.last().unwrap();
    let ratio = last / first;

    let accuracy = |adapter: &AdapterParams| -> Result<f64> {
        let mut templates = Vec::new();
        for (id, views) in &corpus.views {
            for v in views {
                templates.push((id.as_str(), template_embedding(v, adapter)?));
            }
        }
        let mut correct = 0;
        for q in &corpus.queries {
            let e = region_embedding(&q.grid, &q.gt, adapter)?;
            let best = templates
                .iter()
                .map(|(id, t)| (*id, e.cosine(t)))
                .fold(("", f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            correct += (best.0 == q.target) as usize;
        }
        Ok(correct as f64 / corpus.queries.len() as f64)
    };
    let trained = accuracy(&t.adapter)?;
    let identity = accuracy(&AdapterParams::identity(t.adapter.dim))?;
    outcome(
        ratio <= 0.5 && trained >= identity,
        format!(
            "{} samples, loss {first:.4} -> {last:.4} (ratio {ratio:.3}); top-1 retrieval trained {trained:.3} vs identity {identity:.3}",
            corpus.adapter_samples().len()
        ),
    )
}

fn c9_k_sweep() -> Result<Outcome> {
    let cc = CorpusConfig::default();
    let mut cfg = PipelineConfig::default();
    cfg.use_adapter = true;
    cfg.use_token = true;
    let points = run_k_sweep(&cc, &[1, 4, 8, 12], &cfg, &ProceduralProvider::default())?;
    let ap = |k| points.iter().find(|p| p.k == k).map(|p| p.ap).unwrap_or(f64::NAN);
    let curve: Vec<String> = points.iter().map(|p| format!("K={} {:.4}", p.k, p.ap)).collect();
    outcome(ap(12) >= ap(1), format!("AP curve: {}", curve.join(", ")))
}

fn format_error(r: Result<impl Sized>) -> bool {
    matches!(r, Err(L2gError::Format { .. }))
}

fn c10_formats() -> Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let data: Vec<f32> = (0..3 * 5 * 7).map(|_| rng.gen_range(-2.0f32..2.0)).collect();
    let grid = FeatureGrid::new(3, 5, 7, 16, (8, -8), data)?;
    let fpath = dir.path().join("g.l2gf");
    write_feature_file(&grid, &fpath)?;
    let fbytes = std::fs::read(&fpath)?;
    let back = read_feature_file(&fpath)?;
    let mut ok = back.raw().iter().map(|v| v.to_bits()).eq(grid.raw().iter().map(|v| v.to_bits()))
        && back.rows() == 3
        && back.cols() == 5
        && back.dim() == 7
        && back.stride() == 16
        && back.origin_offset() == (8, -8);

    let adapter = AdapterParams::random(7, 9, 0.2, &mut rng);
    let apath = dir.path().join("a.l2ga");
    l2g_core::selector::write_adapter(&adapter, &apath)?;
    let aback = read_adapter(&apath)?;
    ok &= aback.to_flat().iter().map(|v| v.to_bits()).eq(adapter.to_flat().iter().map(|v| v.to_bits()));
    ok &= encode_adapter(&aback) == std::fs::read(&apath)?;

    let mut memory = TokenMemory::new();
    for id in ["b", "a", "c"] {
        let mut t = ObjectToken::zeros(id, 7);
        t.vector = (0..7).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        t.trained_epochs = 12;
        memory.add(t);
    }
    let tpath = dir.path().join("t.l2gt");
    memory.save(&tpath)?;
    let tbytes = std::fs::read(&tpath)?;
    ok &= TokenMemory::decode(&tbytes)?.encode() == tbytes;

    let corrupt = |bytes: &[u8], at: usize, value: u8| {
        let mut b = bytes.to_vec();
        b[at] = value;
        b
    };
    let mut errors = 0;
    let mut expect = |ok: bool| errors += (!ok) as usize;
    let bad = dir.path().join("bad");
    for (at, v) in [(0usize, b'X'), (4, 9)] {
        std::fs::write(&bad, corrupt(&fbytes, at, v))?;
        expect(format_error(read_feature_file(&bad)));
        expect(format_error(decode_adapter(&corrupt(&encode_adapter(&adapter), at, v))));
        expect(format_error(TokenMemory::decode(&corrupt(&tbytes, at, v))));
    }
    std::fs::write(&bad, &fbytes[..fbytes.len() - 3])?;
    expect(format_error(read_feature_file(&bad)));
    expect(format_error(decode_adapter(&encode_adapter(&adapter)[..30])));
    expect(format_error(TokenMemory::decode(&tbytes[..tbytes.len() - 1])));
    outcome(ok && errors == 0, format!("L2GF/L2GA/L2GT bit-exact: {ok}; corrupted fixtures not rejected: {errors}"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("gradient fidelity", c1_gradients),
        ("filter oracle", c2_filter),
        ("matching oracle", c3_matching),
        ("AP oracle", c4_ap),
        ("ablation direction", c5_ablation),
        ("token isolation", c6_isolation),
        ("determinism", c7_determinism),
        ("adapter learning signal", c8_adapter),
        ("K-sweep shape", c9_k_sweep),
        ("format round-trips", c10_formats),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run().unwrap_or_else(|e| Outcome { pass: false, detail: format!("error: {e}") });
        failed += (!o.pass) as usize;
        println!("criterion {:>2} {name}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
