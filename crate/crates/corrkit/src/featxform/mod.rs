//! Deterministic forward passes of the feature-transformation operators:
//! attention-guided upsampling and multi-scale patch embedding.
//!
//! Nothing here trains. Parameters are either supplied explicitly, loaded
//! from a [`ParamStore`], or drawn from a seeded generator, so every output
//! is reproducible bit for bit.

mod attention;
mod embed;
mod params;

pub use attention::{
    guided_upsample, guided_upsample_detailed, unfold_3x3, AttentionWeights, UpsampleAttention,
};
pub use embed::{multiscale_patch_embed, FeaturePyramid, PatchEmbedSpec};
pub use params::{LinearMap, ParamStore};
