use serde::{Deserialize, Serialize};

use super::scoring::ScoredCandidate;
use crate::error::{L2gError, Result};
use crate::matching::CandidatePoint;
use crate::raster::Pixel;

/// Indices `i` with `max(scores) - scores[i] < delta`.
pub fn filter_scores(scores: &[f64], delta: f64) -> Vec<usize> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    scores.iter().enumerate().filter(|(_, &s)| max - s < delta).map(|(i, _)| i).collect()
}

/// Retains the candidates of one template that lie within `delta` of its
/// best score. The best candidate always survives.
pub fn filter_candidates(scored: &[ScoredCandidate], delta: f64) -> Result<Vec<ScoredCandidate>> {
    if scored.is_empty() {
        return Err(L2gError::Contract("cannot filter an empty candidate list".into()));
    }
    if !(delta > 0.0) {
        return Err(L2gError::Contract(format!("delta must be > 0, got {delta}")));
    }
    let scores: Vec<f64> = scored.iter().map(|s| s.score).collect();
    Ok(filter_scores(&scores, delta).into_iter().map(|i| scored[i].clone()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedPoint {
    pub pixel: Pixel,
    /// Best score among the candidates that landed on this pixel.
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectedPoints {
    pub per_template: Vec<Vec<CandidatePoint>>,
    /// Deduplicated union in order of first appearance.
    pub union: Vec<SelectedPoint>,
    /// Indices into `union`, one group per spatial cluster.
    pub clusters: Vec<Vec<usize>>,
}

impl SelectedPoints {
    pub fn cluster_points(&self, c: usize) -> Vec<(Pixel, f64)> {
        self.clusters[c].iter().map(|&i| (self.union[i].pixel, self.union[i].score)).collect()
    }
}

/// Union of the per-template selections followed by single-linkage
/// clustering (points within `radius` pixels are linked).
pub fn aggregate_and_cluster(per_template: &[Vec<ScoredCandidate>], radius: f64) -> Result<SelectedPoints> {
    if !(radius > 0.0) {
        return Err(L2gError::Contract(format!("cluster radius must be > 0, got {radius}")));
    }
    let mut union: Vec<SelectedPoint> = Vec::new();
    for s in per_template.iter().flatten() {
        match union.iter_mut().find(|u| u.pixel == s.candidate.pixel) {
            Some(u) => u.score = u.score.max(s.score),
            None => union.push(SelectedPoint { pixel: s.candidate.pixel, score: s.score }),
        }
    }

    let n = union.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if union[i].pixel.dist(&union[j].pixel) <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_slot[r] {
            Some(c) => clusters[c].push(i),
            None => {
                root_slot[r] = Some(clusters.len());
                clusters.push(vec![i]);
            }
        }
    }
    Ok(SelectedPoints {
        per_template: per_template.iter().map(|l| l.iter().map(|s| s.candidate.clone()).collect()).collect(),
        union,
        clusters,
    })
}

/// Farthest-point-first selection of up to `n` prompts. The first pick is
/// the highest score; each next pick maximises the distance to the nearest
/// picked point. Ties go to the lexicographically smallest pixel.
pub fn fps_select(cluster: &[(Pixel, f64)], n: usize) -> Result<Vec<Pixel>> {
    if cluster.is_empty() {
        return Err(L2gError::Contract("fps_select needs a nonempty cluster".into()));
    }
    if n == 0 {
        return Err(L2gError::Contract("fps_select needs n >= 1".into()));
    }
    let mut first = 0;
    for (i, (p, s)) in cluster.iter().enumerate() {
        let (bp, bs) = cluster[first];
        if *s > bs || (*s == bs && *p < bp) {
            first = i;
        }
    }
    let mut picked = vec![first];
    let mut min_dist: Vec<f64> = cluster.iter().map(|(p, _)| p.dist(&cluster[first].0)).collect();
    while picked.len() < n.min(cluster.len()) {
        let mut best: Option<usize> = None;
        for i in 0..cluster.len() {
            if picked.contains(&i) {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) if min_dist[i] > min_dist[b]
                    || (min_dist[i] == min_dist[b] && cluster[i].0 < cluster[b].0) => Some(i),
                keep => keep,
            };
        }
        let b = best.expect("unpicked point exists");
        picked.push(b);
        for i in 0..cluster.len() {
            min_dist[i] = min_dist[i].min(cluster[i].0.dist(&cluster[b].0));
        }
    }
    Ok(picked.into_iter().map(|i| cluster[i].0).collect())
}
