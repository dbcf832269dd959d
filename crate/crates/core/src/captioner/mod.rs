//! Two-LSTM attention caption generator.
//!
//! An attention LSTM reads the global image feature, the previous token's
//! embedding and the language LSTM's hidden state; its output scores the
//! image regions additively, and the language LSTM consumes the attended
//! feature to produce vocabulary logits. Generation can sample hard tokens
//! whose one-hot vectors stay attached to the graph through a
//! straight-through node, which is what lets a downstream retriever loss
//! reach the decoder's parameters.

mod decoder;
mod generate;
mod loss;
mod model;

pub use decoder::{attend, decode_step, pool_regions, DecoderState, ImageContext, TokenInput};
pub use generate::{dedup_consecutive, generate, straight_through, Generated, SampleMode};
pub use loss::{caption_targets, xent_loss};
pub use model::{CaptionerConfig, CaptionerModel, CaptionerVars, TrainableSet};
