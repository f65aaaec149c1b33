use super::{FeatureGrid, PatchIndex};
use crate::error::{L2gError, Result};
use crate::raster::Mask;

/// Deterministic stratified sampling of up to `s` patches inside `mask`.
///
/// Eligible patches (≥ 50 % mask coverage) are ordered by linear index and
/// the ones at ranks `floor(i * E / s)`, `i = 0..s`, are returned. With
/// `E <= s` all eligible patches are returned.
pub fn sample_template_patches(grid: &FeatureGrid, mask: &Mask, s: usize) -> Result<Vec<PatchIndex>> {
    if s == 0 {
        return Err(L2gError::Contract("patch sample count must be >= 1".into()));
    }
    let eligible: Vec<usize> = grid
        .eligible(mask)
        .into_iter()
        .enumerate()
        .filter_map(|(j, e)| e.then_some(j))
        .collect();
    let e = eligible.len();
    if e == 0 {
        return Err(L2gError::EmptySelection { context: None });
    }
    let picks: Vec<usize> = if e <= s {
        eligible
    } else {
        (0..s).map(|i| eligible[i * e / s]).collect()
    };
    Ok(picks.into_iter().map(|j| grid.index(j)).collect())
}
