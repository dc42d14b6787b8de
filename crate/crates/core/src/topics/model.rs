use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{Corpus, EmbeddingMatrix};
use crate::linalg;
use crate::par::Parallelism;

pub const TPM_MAGIC: &[u8; 4] = b"TPM1";

/// Tolerance on the sum of a topic distribution.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// T unit-direction centroids plus the softmax temperature used to turn
/// cosine similarities into a topic distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    dim: usize,
    centroids: Vec<f32>,
    centroid_norms: Vec<f64>,
    temperature: f32,
    trained_on: usize,
}

impl TopicModel {
    pub fn new(dim: usize, centroids: Vec<f32>, temperature: f32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("topic model dim must be positive"));
        }
        if centroids.is_empty() || !centroids.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} centroid values do not form rows of dim {dim}",
                centroids.len()
            )));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if let Some(pos) = centroids.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite centroid value at topic {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let centroid_norms: Vec<f64> = centroids.chunks_exact(dim).map(linalg::norm).collect();
        if let Some(t) = centroid_norms.iter().position(|&n| n == 0.0) {
            return Err(Error::invalid(format!("centroid {t} has zero norm")));
        }
        Ok(TopicModel {
            dim,
            centroids,
            centroid_norms,
            temperature,
            trained_on: 0,
        })
    }

    pub(crate) fn with_trained_on(mut self, n: usize) -> Self {
        self.trained_on = n;
        self
    }

    pub fn num_topics(&self) -> usize {
        self.centroid_norms.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn temperature(&self) -> f32 {
        self.temperature
    }

    /// Number of vectors the model was trained on; 0 when loaded from disk.
    pub fn trained_on(&self) -> usize {
        self.trained_on
    }

    pub fn centroid(&self, t: usize) -> &[f32] {
        &self.centroids[t * self.dim..(t + 1) * self.dim]
    }

    pub fn with_temperature(mut self, temperature: f32) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        self.temperature = temperature;
        Ok(self)
    }

    /// Cosine similarity of `vector` to every centroid.
    pub fn cosines(&self, vector: &[f32]) -> Result<Vec<f64>> {
        if vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: vector.len(),
            });
        }
        let n = linalg::norm(vector);
        if n == 0.0 {
            return Err(Error::invalid("cannot infer topics for a zero-norm vector"));
        }
        Ok((0..self.num_topics())
            .map(|t| linalg::dot(vector, self.centroid(t)) / (n * self.centroid_norms[t]))
            .collect())
    }

    /// Softmax over topics of cosine(vector, centroid) / temperature.
    pub fn infer_distribution(&self, vector: &[f32]) -> Result<TopicDistribution> {
        let cos = self.cosines(vector)?;
        let tau = self.temperature as f64;
        let logits: Vec<f64> = cos.iter().map(|c| c / tau).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(TopicDistribution {
            weights: exps.into_iter().map(|e| e / z).collect(),
        })
    }

    /// Index of the largest weight; ties go to the lowest index.
    pub fn assign_cluster(&self, vector: &[f32]) -> Result<usize> {
        Ok(self.infer_distribution(vector)?.argmax())
    }

    /// Hard-assigns every row of `emb`.
    pub fn assign_all(&self, emb: &EmbeddingMatrix, par: Parallelism) -> Result<TopicAssignment> {
        if emb.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                actual: emb.dim(),
            });
        }
        let labels = par.map_range(emb.len(), |i| self.assign_cluster(emb.row(i)));
        let pairs = emb
            .ids()
            .iter()
            .cloned()
            .zip(labels)
            .map(|(id, t)| t.map(|t| (id, t)))
            .collect::<Result<Vec<_>>>()?;
        TopicAssignment::new(self.num_topics(), pairs)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.centroids.len() * 4);
        out.extend_from_slice(TPM_MAGIC);
        out.extend_from_slice(&(self.num_topics() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.temperature.to_le_bytes());
        for v in &self.centroids {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        if bytes.len() < 16 {
            return Err(fail("truncated header".into()));
        }
        if &bytes[..4] != TPM_MAGIC {
            return Err(fail("bad magic, expected \"TPM1\"".into()));
        }
        let word = |i: usize| <[u8; 4]>::try_from(&bytes[i..i + 4]).unwrap();
        let t = u32::from_le_bytes(word(4)) as usize;
        let dim = u32::from_le_bytes(word(8)) as usize;
        let temperature = f32::from_le_bytes(word(12));
        let expected = t
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(16))
            .ok_or_else(|| fail("header sizes overflow".into()))?;
        if bytes.len() != expected {
            return Err(fail(format!(
                "expected {expected} bytes for T={t}, dim={dim}, found {}",
                bytes.len()
            )));
        }
        let centroids = bytes[16..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        TopicModel::new(dim, centroids, temperature).map_err(|e| fail(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

/// A probability vector over T topics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TopicDistribution {
    weights: Vec<f64>,
}

impl TopicDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("topic distribution is empty"));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!(
                "topic weight {w} is negative or non-finite"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!(
                "topic weights sum to {sum}, expected 1"
            )));
        }
        Ok(TopicDistribution { weights })
    }

    pub fn one_hot(num_topics: usize, topic: usize) -> Self {
        let mut weights = vec![0.0; num_topics];
        weights[topic] = 1.0;
        TopicDistribution { weights }
    }

    pub fn uniform(num_topics: usize) -> Self {
        TopicDistribution {
            weights: vec![1.0 / num_topics as f64; num_topics],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate().skip(1) {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

impl TryFrom<Vec<f64>> for TopicDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        TopicDistribution::new(v)
    }
}

impl From<TopicDistribution> for Vec<f64> {
    fn from(d: TopicDistribution) -> Self {
        d.weights
    }
}

impl AsRef<[f64]> for TopicDistribution {
    fn as_ref(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Serialize, Deserialize)]
struct AssignmentLine {
    id: String,
    topic: usize,
}

/// Hard passage -> topic map, kept in insertion order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicAssignment {
    num_topics: usize,
    labels: Vec<(String, usize)>,
    index: HashMap<String, usize>,
}

impl TopicAssignment {
    pub fn new(num_topics: usize, labels: Vec<(String, usize)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, (id, t)) in labels.iter().enumerate() {
            if *t >= num_topics {
                return Err(Error::invalid(format!(
                    "passage \"{id}\" assigned to topic {t}, but T = {num_topics}"
                )));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    context: Some("topic assignment".into()),
                });
            }
        }
        Ok(TopicAssignment {
            num_topics,
            labels,
            index,
        })
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| self.labels[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.labels.iter().map(|(id, t)| (id.as_str(), *t))
    }

    /// Number of passages per topic.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.num_topics];
        for (_, t) in &self.labels {
            h[*t] += 1;
        }
        h
    }

    /// Writes `{"id", "topic"}` lines in assignment order.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (id, topic) in self.iter() {
            out.push_str(&serde_json::to_string(&AssignmentLine {
                id: id.to_owned(),
                topic,
            })?);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads `{"id", "topic"}` lines for a model with `num_topics` topics.
    pub fn load_jsonl(path: &Path, num_topics: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut labels = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let a: AssignmentLine = serde_json::from_str(line).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            labels.push((a.id, a.topic));
        }
        Self::new(num_topics, labels)
    }

    /// Errors unless every corpus passage has a topic.
    pub fn check_total(&self, corpus: &Corpus) -> Result<()> {
        match corpus.passages().iter().find(|p| self.get(&p.id).is_none()) {
            Some(p) => Err(Error::MissingField(format!(
                "passage \"{}\" has no topic assignment",
                p.id
            ))),
            None => Ok(()),
        }
    }
}
