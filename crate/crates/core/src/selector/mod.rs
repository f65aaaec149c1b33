//! Candidate selector: probe each matched point with a single-prompt
//! segmentation, embed the probed region, score it against its own
//! template, keep the candidates within `delta` of each template's best,
//! then group and thin the survivors into prompts.

mod checkpoint;
mod embedding;
mod select;
mod scoring;
mod train;

pub use checkpoint::{decode_adapter, encode_adapter, read_adapter, write_adapter, ADAPTER_MAGIC};
pub use embedding::{embed_raw, raw_region, region_embedding, template_embedding, Embedding};
pub use scoring::{probe_candidate, score_candidates, ScoredCandidate, ScoringMode};
pub use select::{
    aggregate_and_cluster, filter_candidates, filter_scores, fps_select, SelectedPoint, SelectedPoints,
};
pub use train::{train_adapter, tuple_objective, AdapterSample, AdapterTrainConfig, AdapterTraining};

pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_PROMPT_BUDGET: usize = 5;
