//! Claim detection with viewpoint-pillar linguistic encoders.
//!
//! Each input passes through POS and dependency encoders, one per source
//! noise level (noisy, semi-noisy, non-noisy). The per-viewpoint outputs are
//! fused by attention, then fused again with a projected sentence embedding
//! before a small classifier head.

pub mod cli;
pub mod corpus;
pub mod dep;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod hints;
pub mod model;
pub mod nn;
pub mod pos;
pub mod semantic;

pub use error::{Error, Result};
