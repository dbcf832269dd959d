//! Deterministic synthetic multimodal world.
//!
//! Scenes of attributed objects are rendered into fixed-size region feature
//! grids and described by five template captions each, some specific and
//! some generic. Vocabulary construction and the disjoint train/val/test
//! split follow the usual captioning preprocessing discipline.

mod dataset;
mod features;
mod grammar;
mod ontology;
mod rng;
mod vocab;

pub use dataset::{generate_dataset, Dataset, DatasetSplits, Split, WorldConfig};
pub use features::{blocks, render_features, RegionFeatureGrid, BLOCK_WEIGHTS, ENCODED_DIM};
pub use grammar::{
    is_attribute_word, make_captions, parse_specific, CaptionRecord, Specificity, CAPTIONS_PER_IMAGE,
};
pub use ontology::{Category, Color, Position, SceneObject, SceneSpec, Size};
pub use rng::derive_seed;
pub use vocab::{normalize_text, Vocabulary, BOS, EOS, PAD, UNK};
