//! Differentiable building blocks with hand-written backward passes.
//!
//! Layers hold [`ParamId`] handles into a shared [`ParamStore`]. A forward
//! call returns its output plus a cache; the matching backward call consumes
//! the cache, accumulates parameter gradients into the store and returns the
//! gradient with respect to the layer input.

mod attention;
pub mod checkpoint;
mod dense;
mod embedding;
mod gradcheck;
mod lstm;
pub mod ops;
mod params;
mod rng;
mod tensor;
mod transformer;

pub use attention::{AdditiveAttention, AttentionCache};
pub use dense::Dense;
pub use embedding::Embedding;
pub use gradcheck::{gradient_check, GradCheckConfig, GradCheckReport};
pub use lstm::{BiLstm, BiLstmCache, LstmCell, RECURRENT_INIT};
pub use ops::{cross_entropy, softmax, DropoutMask};
pub use params::{AdamConfig, ParamId, ParamStore};
pub use rng::Rng;
pub use tensor::Tensor;
pub use transformer::{LayerNorm, TransformerBlock, TransformerCache, LAYER_NORM_EPS};
