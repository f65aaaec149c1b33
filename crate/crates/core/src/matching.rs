//! Dense local matching of sampled template patches against a query grid.

use serde::{Deserialize, Serialize};

use crate::error::{L2gError, Result};
use crate::features::{sample_template_patches, FeatureGrid, PatchIndex};
use crate::numerics::cosine_unchecked;
use crate::raster::{Mask, Pixel};

/// A template view after feature extraction: its grid and object mask.
#[derive(Debug, Clone)]
pub struct TemplateView {
    pub view_index: usize,
    pub grid: FeatureGrid,
    pub mask: Mask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePoint {
    pub pixel: Pixel,
    pub template_view: usize,
    pub template_patch: PatchIndex,
    pub query_patch: PatchIndex,
    pub match_sim: f64,
}

/// Candidate points grouped by template view (`by_template[k]`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    pub by_template: Vec<Vec<CandidatePoint>>,
}

impl CandidateSet {
    pub fn total(&self) -> usize {
        self.by_template.iter().map(Vec::len).sum()
    }
}

/// Query patch with the highest cosine similarity to `feat`; ties go to the
/// lowest linear index.
pub fn best_match(feat: &[f64], query: &FeatureGrid) -> Result<(PatchIndex, f64)> {
    if query.is_empty() {
        return Err(L2gError::Input("query grid is empty".into()));
    }
    if feat.len() != query.dim() {
        return Err(L2gError::Contract(format!(
            "template feature dim {} != query dim {}",
            feat.len(),
            query.dim()
        )));
    }
    let mut best = 0usize;
    let mut best_sim = f64::NEG_INFINITY;
    for j in 0..query.len() {
        let s = cosine_unchecked(feat, query.feature(j));
        if s > best_sim {
            best_sim = s;
            best = j;
        }
    }
    Ok((query.index(best), best_sim))
}

/// Runs sampling and best-match independently for every template view.
pub fn generate_candidates(
    templates: &[TemplateView],
    query: &FeatureGrid,
    s: usize,
) -> Result<CandidateSet> {
    if s == 0 {
        return Err(L2gError::Contract("patch sample count must be >= 1".into()));
    }
    let mut by_template = Vec::with_capacity(templates.len());
    for (k, t) in templates.iter().enumerate() {
        if t.grid.dim() != query.dim() {
            return Err(L2gError::Contract(format!(
                "template {k} feature dim {} != query dim {}",
                t.grid.dim(),
                query.dim()
            )));
        }
        let picks = sample_template_patches(&t.grid, &t.mask, s).map_err(|e| match e {
            L2gError::EmptySelection { .. } => {
                L2gError::EmptySelection { context: Some(format!("template {k}")) }
            }
            other => other,
        })?;
        let mut list = Vec::with_capacity(picks.len());
        for tp in picks {
            let (qp, sim) = best_match(t.grid.feature_at(tp), query)?;
            list.push(CandidatePoint {
                pixel: query.patch_center(qp),
                template_view: k,
                template_patch: tp,
                query_patch: qp,
                match_sim: sim,
            });
        }
        by_template.push(list);
    }
    Ok(CandidateSet { by_template })
}
