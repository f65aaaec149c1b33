use std::collections::BTreeMap;

use super::embedding::{embed_raw, Embedding};
use crate::error::{L2gError, Result};
use crate::features::FeatureGrid;
use crate::matching::{CandidatePoint, CandidateSet};
use crate::numerics::{normalized, AdapterParams};
use crate::raster::{Mask, Pixel};
use crate::segmenter::{prompt_patches, Segmenter};

/// How a probe embedding is compared with the templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Candidate `(i, k)` is scored against template `k` only.
    #[default]
    TemplateSpecific,
    /// Ablation only: every candidate is scored against the mean of all
    /// template embeddings.
    AveragedTemplate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub candidate: CandidatePoint,
    /// Probe mask at patch resolution (`cols × rows`).
    pub probe_mask: Mask,
    pub score: f64,
}

/// Single-point probe: segments with exactly one prompt and returns the
/// patch-resolution mask.
pub fn probe_candidate(
    segmenter: &dyn Segmenter,
    grid: &FeatureGrid,
    point: Pixel,
    width: usize,
    height: usize,
) -> Result<Mask> {
    let pp = prompt_patches(grid, &[point], width, height)?;
    let patches = segmenter.segment_patches(grid, &pp)?;
    Mask::from_vec(grid.cols(), grid.rows(), patches)
}

/// Scores every candidate. Probes are memoised per query patch since a
/// probe only depends on the prompt's patch.
#[allow(clippy::too_many_arguments)]
pub fn score_candidates(
    candidates: &CandidateSet,
    grid: &FeatureGrid,
    width: usize,
    height: usize,
    template_embeddings: &[Embedding],
    adapter: &AdapterParams,
    segmenter: &dyn Segmenter,
    mode: ScoringMode,
) -> Result<Vec<Vec<ScoredCandidate>>> {
    if template_embeddings.len() != candidates.by_template.len() {
        return Err(L2gError::Contract(format!(
            "{} template embeddings for {} candidate lists",
            template_embeddings.len(),
            candidates.by_template.len()
        )));
    }
    let averaged = match mode {
        ScoringMode::TemplateSpecific => None,
        ScoringMode::AveragedTemplate => {
            let dim = template_embeddings.first().map_or(0, |e| e.0.len());
            let mut acc = vec![0.0; dim];
            for e in template_embeddings {
                for (a, v) in acc.iter_mut().zip(&e.0) {
                    *a += v;
                }
            }
            Some(Embedding(normalized(&acc)))
        }
    };

    let mut probes: BTreeMap<usize, (Mask, Option<Embedding>)> = BTreeMap::new();
    let mut out = Vec::with_capacity(candidates.by_template.len());
    for (k, list) in candidates.by_template.iter().enumerate() {
        let reference = averaged.as_ref().unwrap_or(&template_embeddings[k]);
        let mut scored = Vec::with_capacity(list.len());
        for c in list {
            let key = c.query_patch.linear(grid.cols());
            if !probes.contains_key(&key) {
                let mask = probe_candidate(segmenter, grid, c.pixel, width, height)?;
                let emb = match grid.mean_feature(mask.as_slice()) {
                    Some(mean) => Some(embed_raw(&normalized(&mean), adapter)?),
                    None => None,
                };
                probes.insert(key, (mask, emb));
            }
            let (mask, emb) = &probes[&key];
            // empty probes never win a template
            let score = emb.as_ref().map_or(-1.0, |e| e.cosine(reference));
            scored.push(ScoredCandidate { candidate: c.clone(), probe_mask: mask.clone(), score });
        }
        out.push(scored);
    }
    Ok(out)
}
