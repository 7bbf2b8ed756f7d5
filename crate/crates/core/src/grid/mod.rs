//! Image ingestion and natural patch statistics.

mod binarize;
mod frequency;
mod patches;
mod pgm;

pub use binarize::{binarize_median, lower_median, BitGrid};
pub use frequency::{
    chance_probability, natural_randomness, natural_randomness_in, scan_corpus, FrequencyTable,
    GridError, TableParseError,
};
pub use patches::{extract_patches, window_count, window_offsets, ExtractionMode};
pub use pgm::{load_pgm, GrayImage, PgmError};
