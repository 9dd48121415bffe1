//! Piatetski-Shapiro sequences `⌊n^c⌋ mod m`: certified evaluation and the
//! statistics used to probe their randomness.

pub mod block_stats;
pub mod certified_eval;
pub mod error;
pub mod missing_blocks;
pub mod multiplicative;
pub mod spectral;
pub mod sources;
pub mod subword_complexity;

pub use error::{Error, Result};

/// Serializes a value through its `Display` form (big integers, rationals).
pub(crate) fn serialize_display<T: std::fmt::Display, S: serde::Serializer>(
    v: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}
