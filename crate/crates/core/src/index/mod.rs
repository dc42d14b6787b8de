//! Topic-sharded flat dense index.
//!
//! The knowledge base is split into T disjoint shards, one per topic, each
//! holding the passage vectors produced by that topic's document encoder. A
//! query with topic distribution `w` scores passage `p` of shard `i` as
//! `(q · p) × w_i`. Retrieval takes the top K of every shard under that score
//! and keeps the global top K of the pooled K×T candidates.
//!
//! Per-shard selection uses the weighted score rather than the raw dot
//! product. The two orders agree whenever `w_i > 0` except where rounding of
//! the product creates new ties; selecting on the weighted key makes the
//! merged result identical to an exhaustive scan in every case, including
//! zero-weight shards whose candidates all tie at score 0.
//!
//! Scores from different shards are compared directly, with no calibration
//! between the per-topic encoders.

mod store;
mod topk;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

pub use store::{
    load_index, save_index, shard_file_name, write_retrievals, IndexManifest, RetrievalLine,
    MANIFEST_FILE,
};
pub use topk::{rank_order, weighted_score};

use crate::error::{Error, Result};
use crate::kb::{Corpus, EmbeddingMatrix};
use crate::linalg;
use crate::par::Parallelism;
use crate::topics::TopicAssignment;
use topk::{Candidate, TopK};

/// One retrieved passage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage_id: String,
    pub topic_id: usize,
    /// Query-passage dot product before topic weighting.
    pub raw_dot: f64,
    /// `raw_dot × w[topic_id]`.
    pub score: f64,
}

/// Passage vectors of one topic cluster; row `r` belongs to `emb.ids()[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    topic_id: usize,
    emb: EmbeddingMatrix,
}

impl Shard {
    pub fn topic_id(&self) -> usize {
        self.topic_id
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.emb
    }

    pub fn len(&self) -> usize {
        self.emb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emb.is_empty()
    }

    fn top_weighted(&self, q: &[f32], k: usize, weight: f64) -> Vec<ScoredPassage> {
        let mut top = TopK::new(k);
        for (id, v) in self.emb.rows() {
            let raw_dot = linalg::dot(q, v);
            top.push(Candidate {
                score: weighted_score(raw_dot, weight),
                raw_dot,
                id,
            });
        }
        top.into_sorted()
            .into_iter()
            .map(|c| ScoredPassage {
                passage_id: c.id.to_owned(),
                topic_id: self.topic_id,
                raw_dot: c.raw_dot,
                score: c.score,
            })
            .collect()
    }
}

/// The K passages of `shard` with the largest `q · d`, best first, ties by
/// ascending passage id. `score` equals `raw_dot`.
pub fn shard_topk(shard: &Shard, q: &[f32], k: usize) -> Result<Vec<ScoredPassage>> {
    if k < 1 {
        return Err(Error::invalid("K must be at least 1"));
    }
    check_dim(shard.emb.dim(), q)?;
    Ok(shard.top_weighted(q, k, 1.0))
}

fn check_dim(expected: usize, q: &[f32]) -> Result<()> {
    if q.len() != expected {
        return Err(Error::DimMismatch {
            expected,
            actual: q.len(),
        });
    }
    Ok(())
}

/// Shape of a freshly built index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub num_topics: usize,
    pub dim: usize,
    pub shard_sizes: Vec<usize>,
    pub empty_shards: Vec<usize>,
    pub total_passages: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShardedIndex {
    dim: usize,
    shards: Vec<Shard>,
    location: HashMap<String, usize>,
}

impl ShardedIndex {
    /// Index over `shards[t]` for topic `t`. Passage ids must be unique
    /// across shards and every shard must share one dimension.
    pub fn from_shards(shards: Vec<EmbeddingMatrix>) -> Result<Self> {
        if shards.is_empty() {
            return Err(Error::invalid("an index needs at least one shard"));
        }
        let dim = crate::kb::common_dim(&shards)?.expect("non-empty");
        let mut location = HashMap::new();
        for (t, emb) in shards.iter().enumerate() {
            for id in emb.ids() {
                if let Some(prev) = location.insert(id.clone(), t) {
                    return Err(Error::DuplicateId {
                        id: id.clone(),
                        context: Some(format!("in shards {prev} and {t}")),
                    });
                }
            }
        }
        let shards = shards
            .into_iter()
            .enumerate()
            .map(|(topic_id, emb)| Shard { topic_id, emb })
            .collect();
        Ok(ShardedIndex {
            dim,
            shards,
            location,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.shards.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shards(&self) -> &[Shard] {
        &self.shards
    }

    pub fn shard(&self, topic_id: usize) -> &Shard {
        &self.shards[topic_id]
    }

    pub fn len(&self) -> usize {
        self.location.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location.is_empty()
    }

    pub fn topic_of(&self, passage_id: &str) -> Option<usize> {
        self.location.get(passage_id).copied()
    }

    pub fn report(&self) -> BuildReport {
        let shard_sizes: Vec<usize> = self.shards.iter().map(Shard::len).collect();
        BuildReport {
            num_topics: self.num_topics(),
            dim: self.dim,
            empty_shards: shard_sizes
                .iter()
                .enumerate()
                .filter(|(_, &n)| n == 0)
                .map(|(t, _)| t)
                .collect(),
            total_passages: self.len(),
            shard_sizes,
        }
    }

    fn check_query(&self, q: &[f32], weights: &[f64], k: usize) -> Result<()> {
        if k < 1 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if weights.len() != self.num_topics() {
            return Err(Error::invalid(format!(
                "topic distribution has {} weights but the index has {} shards",
                weights.len(),
                self.num_topics()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!(
                "topic weight {w} is negative or non-finite"
            )));
        }
        check_dim(self.dim, q)
    }

    /// Topic-weighted top-K: per-shard top K, then the global top K of the
    /// pooled candidates.
    pub fn retrieve(&self, q: &[f32], weights: &[f64], k: usize) -> Result<Vec<ScoredPassage>> {
        self.retrieve_with(q, weights, k, Parallelism::auto())
    }

    pub fn retrieve_with(
        &self,
        q: &[f32],
        weights: &[f64],
        k: usize,
        par: Parallelism,
    ) -> Result<Vec<ScoredPassage>> {
        self.check_query(q, weights, k)?;
        let per_shard = par.map(&self.shards, |s| s.top_weighted(q, k, weights[s.topic_id]));
        let mut pooled: Vec<ScoredPassage> = per_shard.into_iter().flatten().collect();
        pooled.sort_by(rank_order);
        pooled.truncate(k);
        Ok(pooled)
    }

    /// Exhaustive reference for [`retrieve`](Self::retrieve): scores every
    /// passage and sorts globally, with no per-shard pruning.
    pub fn oracle_retrieve(
        &self,
        q: &[f32],
        weights: &[f64],
        k: usize,
    ) -> Result<Vec<ScoredPassage>> {
        self.check_query(q, weights, k)?;
        let mut all = Vec::with_capacity(self.len());
        for shard in &self.shards {
            let w = weights[shard.topic_id];
            for (id, v) in shard.emb.rows() {
                let raw_dot = linalg::dot(q, v);
                all.push(ScoredPassage {
                    passage_id: id.to_owned(),
                    topic_id: shard.topic_id,
                    raw_dot,
                    score: weighted_score(raw_dot, w),
                });
            }
        }
        all.sort_by(rank_order);
        all.truncate(k);
        Ok(all)
    }

    /// Retrieves for many queries at once; output order follows input order.
    pub fn retrieve_batch<W: AsRef<[f64]> + Sync>(
        &self,
        queries: &[(&[f32], W)],
        k: usize,
        par: Parallelism,
    ) -> Result<Vec<Vec<ScoredPassage>>> {
        // parallelism goes across queries; each query scans shards in order
        par.map(queries, |(q, w)| {
            self.retrieve_with(q, w.as_ref(), k, Parallelism::Sequential)
        })
        .into_iter()
        .collect()
    }
}

/// Builds an index from per-topic passage matrices keyed by topic id.
///
/// Topic ids must be exactly `0..T`. Every passage must exist in `corpus`
/// and live in a single shard. Empty shards are allowed and listed in the
/// report.
pub fn build_index(
    corpus: &Corpus,
    per_shard: BTreeMap<usize, EmbeddingMatrix>,
) -> Result<(ShardedIndex, BuildReport)> {
    if per_shard.is_empty() {
        return Err(Error::invalid("an index needs at least one shard"));
    }
    for (expected, &t) in per_shard.keys().enumerate() {
        if t != expected {
            return Err(Error::invalid(format!(
                "shard topic ids must be 0..{}, missing {expected}",
                per_shard.len()
            )));
        }
    }
    for emb in per_shard.values() {
        if let Some(id) = emb.ids().iter().find(|id| !corpus.contains(id)) {
            return Err(Error::UnknownId(id.clone()));
        }
    }
    let index = ShardedIndex::from_shards(per_shard.into_values().collect())?;
    let report = index.report();
    Ok((index, report))
}

/// Splits one global matrix into per-topic matrices, keeping row order.
/// Every row must be assigned; every topic in `0..T` gets an entry.
pub fn split_by_assignment(
    emb: &EmbeddingMatrix,
    assignment: &TopicAssignment,
) -> Result<BTreeMap<usize, EmbeddingMatrix>> {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); assignment.num_topics()];
    for (r, id) in emb.ids().iter().enumerate() {
        let t = assignment.get(id).ok_or_else(|| {
            Error::MissingField(format!("passage \"{id}\" has no topic assignment"))
        })?;
        rows[t].push(r);
    }
    Ok(rows
        .iter()
        .enumerate()
        .map(|(t, r)| (t, emb.select(r)))
        .collect())
}
