use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TopicDistribution, TopicModel};
use crate::error::{Error, Result};

/// Source of a query's topic distribution.
pub trait DistributionProvider: Sync {
    fn num_topics(&self) -> usize;

    /// Distribution for the query `id` whose query-encoder output is `vector`.
    fn distribution(&self, id: &str, vector: &[f32]) -> Result<TopicDistribution>;
}

impl DistributionProvider for TopicModel {
    fn num_topics(&self) -> usize {
        TopicModel::num_topics(self)
    }

    fn distribution(&self, _id: &str, vector: &[f32]) -> Result<TopicDistribution> {
        self.infer_distribution(vector)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DistributionLine {
    id: String,
    weights: TopicDistribution,
}

/// Precomputed distributions keyed by query id, e.g. exported from an
/// external topic model.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalDistributions {
    num_topics: usize,
    by_id: BTreeMap<String, TopicDistribution>,
}

impl ExternalDistributions {
    pub fn new(entries: impl IntoIterator<Item = (String, TopicDistribution)>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        let mut num_topics = None;
        for (id, w) in entries {
            match num_topics {
                None => num_topics = Some(w.len()),
                Some(t) if t != w.len() => {
                    return Err(Error::invalid(format!(
                        "distribution for \"{id}\" has {} topics, expected {t}",
                        w.len()
                    )))
                }
                _ => {}
            }
            if by_id.insert(id.clone(), w).is_some() {
                return Err(Error::DuplicateId {
                    id,
                    context: Some("distribution file".into()),
                });
            }
        }
        let num_topics = num_topics.ok_or_else(|| Error::invalid("distribution file is empty"))?;
        Ok(ExternalDistributions { num_topics, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&TopicDistribution> {
        self.by_id.get(id)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let d: DistributionLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            entries.push((d.id, d.weights));
        }
        Self::new(entries)
    }
}

/// Writes `{"id", "weights"}` lines in the given order.
pub fn write_distributions<'a>(
    path: &Path,
    entries: impl IntoIterator<Item = (&'a str, &'a TopicDistribution)>,
) -> Result<()> {
    let mut out = String::new();
    for (id, w) in entries {
        out.push_str(&serde_json::to_string(&DistributionLine {
            id: id.to_owned(),
            weights: w.clone(),
        })?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

impl DistributionProvider for ExternalDistributions {
    fn num_topics(&self) -> usize {
        self.num_topics
    }

    fn distribution(&self, id: &str, _vector: &[f32]) -> Result<TopicDistribution> {
        self.by_id
            .get(id)
            .cloned()
            .ok_or_else(|| Error::MissingField(format!("no topic distribution for query \"{id}\"")))
    }
}
