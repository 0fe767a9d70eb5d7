//! Dependency branch: tri-grams over relation tags, the parent-position
//! augmented encoding, and the per-viewpoint transformer pillars.

mod encode;
mod pillar;

pub use encode::{dep_trigrams, position_signal, DepSeq, PositionalMode, DEP_K, SIGNAL_DIM};
pub use pillar::{dep_pillar_forward, dep_view_fuse, DepPillar, DepPillarCache, DepPillarConfig};

/// Skip-gram embedding of dependency tri-grams.
pub type DepEmbedding = crate::pos::NgramEmbedding;
