//! Mixer blocks, the full network, its ablation variants and the unraveled
//! path decomposition.
//!
//! Seeds: block `i` draws its projection from `seed + i`; every trainable
//! weight comes from one stream seeded with `seed + INIT_SEED_OFFSET`.

mod block;
mod config;
mod network;

pub use block::{ActivationOrder, BlockCache, MixerBlock, Projection, Temporal};
pub use config::{projection_width, AblationFlags, ModelConfig, INIT_SEED_OFFSET};
pub use network::{
    build_ablation, build_model, ForwardCache, Forecaster, LinearCache, LinearForecaster,
    PathDecomposition, RpMixer,
};
