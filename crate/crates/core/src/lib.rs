//! Topic-sharded dense passage retrieval.
//!
//! Passages are clustered into T topics and each topic gets its own flat
//! dense index. A query carries a distribution over the topics; a passage in
//! shard `i` scores `(q · p) × w_i`, and the per-shard top-K lists are merged
//! into one global ranking.
//!
//! The crate also carries the evaluation metrics and the synthetic
//! experiment driver used to pick T on validation data.

pub mod cli;
mod error;
pub mod experiment;
pub mod index;
pub mod kb;
pub mod linalg;
pub mod metrics;
pub mod par;
pub mod text;
pub mod topics;

pub use error::{Error, Result};
