//! Records, tweet cleaning, de-duplication, splitting, balancing and statistics.

mod preprocess;
mod record;
mod spell;
mod split;
mod stats;
pub mod synthetic;

pub use preprocess::{preprocess_tweet, Preprocessed, MIN_CHARS, MIN_WORDS};
pub use record::{parse_records, write_records, Label, Record, Source, Viewpoint};
pub use spell::{osa_distance, SpellDictionary, DEFAULT_MAX_EDIT_DISTANCE};
pub use split::{dedup, dedup_by, downsample, normalized_text, split, Split, TRAIN_FRACTION, VAL_FRACTION};
pub use stats::{dataset_stats, Counts, DatasetStats};
