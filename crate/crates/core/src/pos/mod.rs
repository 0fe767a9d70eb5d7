//! POS branch: k-gram construction, skip-gram embeddings and the per-viewpoint pillars.

mod embedding_file;
mod ngrams;
mod pillar;
mod skipgram;

pub use embedding_file::{NgramEmbedding, DEP_EMBEDDING_MAGIC, POS_EMBEDDING_MAGIC};
pub use ngrams::{pos_ngrams, Ngram, NgramVocab, BOS, DISCARD_AT_OR_BELOW, EOS, UNK, UNK_INDEX};
pub use pillar::{pos_pillar_forward, pos_view_fuse, PosPillar, PosPillarCache, PosPillarConfig, MAX_SEQ_LEN};
pub use skipgram::{skipgram_pairs, train_skipgram, SkipGramConfig, SkipGramModel};

/// Skip-gram embedding of POS k-grams.
pub type PosEmbedding = NgramEmbedding;
