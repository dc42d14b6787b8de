//! Topic distributions over the knowledge base.
//!
//! A [`TopicModel`] is a set of centroid directions learned by spherical
//! k-means over passage embeddings. Any vector maps to a distribution via a
//! temperature-scaled softmax of its cosine to each centroid, and to a hard
//! cluster via the argmax of that distribution. Distributions produced by an
//! external topic model can be plugged in through [`ExternalDistributions`].

mod coherence;
mod keywords;
mod kmeans;
mod model;
mod provider;
pub mod stopwords;

pub use coherence::topic_coherence;
pub use keywords::top_words;
pub use kmeans::{train_topics, TrainConfig};
pub use model::{TopicAssignment, TopicDistribution, TopicModel, SIMPLEX_TOLERANCE, TPM_MAGIC};
pub use provider::{write_distributions, DistributionProvider, ExternalDistributions};
