//! Local-to-global novel instance detection.
//!
//! Given K masked template views of an object instance, the pipeline finds
//! and segments that instance in query images:
//!
//! 1. dense patch matching between sampled template patches and the query
//!    feature grid ([`matching`]),
//! 2. a candidate selector that probes every match with a single-point
//!    segmentation, embeds the probed region and keeps the candidates that
//!    agree best with each template ([`selector`]),
//! 3. promptable mask reconstruction conditioned on a learned per-instance
//!    object token ([`segmenter`]).
//!
//! Training (contrastive adapter, object tokens) runs on synthetic scenes
//! composed from the templates ([`synth`]) and evaluation uses COCO-style
//! mask AP ([`eval`]). [`pipeline`] ties everything together.

pub mod error;
pub mod eval;
pub mod features;
pub mod library;
pub mod matching;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod raster;
pub mod segmenter;
pub mod selector;
pub mod synth;

pub use error::{L2gError, Result};
pub use features::{FeatureGrid, PatchIndex, ProceduralProvider};
pub use raster::{Mask, Pixel};
