use crate::error::{L2gError, Result};
use crate::features::FeatureGrid;
use crate::matching::TemplateView;
use crate::numerics::{normalized, AdapterParams};
use crate::raster::Mask;

/// Unit-norm region embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(pub Vec<f64>);

impl Embedding {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn cosine(&self, other: &Embedding) -> f64 {
        crate::numerics::cosine_unchecked(&self.0, &other.0)
    }
}

/// Encoder output before the adapter: mean feature of the patches the mask
/// covers by at least half, L2-normalised.
pub fn raw_region(grid: &FeatureGrid, mask: &Mask) -> Result<Vec<f64>> {
    let eligible = grid.eligible(mask);
    grid.mean_feature(&eligible).map(|m| normalized(&m)).ok_or(L2gError::EmptyRegion)
}

pub fn embed_raw(raw: &[f64], adapter: &AdapterParams) -> Result<Embedding> {
    Ok(Embedding(normalized(&adapter.apply(raw)?)))
}

pub fn region_embedding(grid: &FeatureGrid, mask: &Mask, adapter: &AdapterParams) -> Result<Embedding> {
    embed_raw(&raw_region(grid, mask)?, adapter)
}

pub fn template_embedding(view: &TemplateView, adapter: &AdapterParams) -> Result<Embedding> {
    region_embedding(&view.grid, &view.mask, adapter)
}
