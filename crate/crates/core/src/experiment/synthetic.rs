//! Planted-topic synthetic knowledge bases.
//!
//! Topic directions are random unit vectors kept at pairwise cosine below
//! 0.5. Passages scatter around their topic direction; each query starts
//! from one gold passage and adds noise that is orthogonal to every topic
//! direction, so the noise blurs which passage is meant without blurring
//! which topic is meant. That is the structure topic weighting exploits.

use std::collections::{BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{Corpus, EmbeddingMatrix, Passage, QueryRecord, QuerySet, Turn};
use crate::topics::TopicAssignment;

/// Passages per synthetic page.
pub const PAGE_SIZE: usize = 4;

const MAX_CENTROID_MAX_COS: f64 = 0.5;
const CENTROID_ATTEMPTS: usize = 10_000;
const WORDS_PER_PASSAGE: usize = 12;
const SHARED_WORDS: &[&str] = &["answer", "detail", "question", "section", "topic"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub true_t: usize,
    pub passages_per_topic: usize,
    pub dim: usize,
    /// Per-component standard deviation of passage noise.
    pub noise_sigma: f64,
    /// Per-component standard deviation of query noise, applied only in
    /// the subspace orthogonal to the topic directions.
    pub query_noise_sigma: f64,
    /// Queries per topic, for each of the validation and test sets.
    pub queries_per_topic: usize,
    pub vocab_per_topic: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            true_t: 4,
            passages_per_topic: 50,
            dim: 1024,
            noise_sigma: 0.05,
            query_noise_sigma: 0.5,
            queries_per_topic: 20,
            vocab_per_topic: 30,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("true_t", self.true_t),
            ("passages_per_topic", self.passages_per_topic),
            ("queries_per_topic", self.queries_per_topic),
            ("vocab_per_topic", self.vocab_per_topic),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v < 1) {
            return Err(Error::invalid(format!("{name} must be at least 1")));
        }
        if self.dim < 2 {
            return Err(Error::invalid("dim must be at least 2"));
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("query_noise_sigma", self.query_noise_sigma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub corpus: Corpus,
    pub embeddings: EmbeddingMatrix,
    pub validation: QuerySet,
    pub test: QuerySet,
    pub planted: TopicAssignment,
    /// Unit topic directions, one row per planted topic.
    pub centroids: Vec<Vec<f64>>,
    /// Vectors for every vocabulary word, for coherence scoring.
    pub word_vectors: HashMap<String, Vec<f32>>,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = crate::linalg::norm64(v);
    v.iter().map(|x| x / n).collect()
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn topic_word(t: usize, j: usize) -> String {
    format!("t{t}w{j}")
}

fn draw_centroids(rng: &mut ChaCha8Rng, spec: &SyntheticSpec) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spec.true_t);
    let mut attempts = 0;
    while out.len() < spec.true_t {
        attempts += 1;
        if attempts > CENTROID_ATTEMPTS {
            return Err(Error::invalid(format!(
                "could not place {} topic directions in {} dimensions at pairwise cosine < {MAX_CENTROID_MAX_COS}",
                spec.true_t, spec.dim
            )));
        }
        let c = unit(&gaussian(rng, spec.dim));
        if out
            .iter()
            .all(|o| crate::linalg::dot64(o, &c) < MAX_CENTROID_MAX_COS)
        {
            out.push(c);
        }
    }
    Ok(out)
}

/// Orthonormal basis of the span of `vectors` (Gram-Schmidt).
fn orthonormal_basis(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut r = v.clone();
        for b in &basis {
            let d = crate::linalg::dot64(&r, b);
            r.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        if crate::linalg::norm64(&r) > 1e-9 {
            basis.push(unit(&r));
        }
    }
    basis
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn sentence(&mut self, vocab: &[String], len: usize) -> String {
        (0..len)
            .map(|_| {
                vocab
                    .choose(&mut self.rng)
                    .expect("vocab non-empty")
                    .as_str()
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn passage_text(&mut self, vocab: &[String]) -> String {
        let mut words: Vec<String> = (0..WORDS_PER_PASSAGE)
            .map(|_| {
                vocab
                    .choose(&mut self.rng)
                    .expect("vocab non-empty")
                    .clone()
            })
            .collect();
        let shared = SHARED_WORDS.choose(&mut self.rng).expect("non-empty");
        let at = self.rng.random_range(0..=words.len());
        words.insert(at, (*shared).to_owned());
        words.join(" ")
    }

    fn queries(
        &mut self,
        prefix: &str,
        passages: &[Passage],
        vectors: &[Vec<f64>],
        topic_rows: &[Vec<usize>],
        basis: &[Vec<f64>],
    ) -> Result<QuerySet> {
        let spec = self.spec;
        let mut records = Vec::new();
        let mut rows = Vec::new();
        for rows_of_topic in topic_rows {
            for _ in 0..spec.queries_per_topic {
                let g = *rows_of_topic
                    .choose(&mut self.rng)
                    .expect("topic non-empty");
                let gold = &passages[g];
                let mut noise = gaussian(&mut self.rng, spec.dim);
                for b in basis {
                    let d = crate::linalg::dot64(&noise, b);
                    noise.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
                }
                let q: Vec<f64> = vectors[g]
                    .iter()
                    .zip(&noise)
                    .map(|(p, n)| p + spec.query_noise_sigma * n)
                    .collect();
                let id = format!("{prefix}{:04}", records.len());

                let gold_words: Vec<String> = gold.text.split(' ').map(str::to_owned).collect();
                let n_turns = self.rng.random_range(1..=3);
                let turns = (0..n_turns)
                    .map(|i| {
                        let len = self.rng.random_range(3..=8);
                        Turn {
                            speaker: if i % 2 == 0 { "user" } else { "agent" }.to_owned(),
                            text: self.sentence(&gold_words, len),
                        }
                    })
                    .collect();
                let reference = self.sentence(&gold_words, 6);
                let candidate = {
                    let keep = self.rng.random_range(2..=6);
                    let mut c = self.sentence(&gold_words, keep);
                    c.push(' ');
                    c.push_str(SHARED_WORDS.choose(&mut self.rng).expect("non-empty"));
                    c
                };
                records.push(QueryRecord {
                    id: id.clone(),
                    turns,
                    gold_page_id: Some(gold.page_id.clone()),
                    gold_passage_ids: Some(BTreeSet::from([gold.id.clone()])),
                    reference_response: Some(reference),
                    candidate_response: Some(candidate),
                });
                rows.push((id, to_f32(&unit(&q))));
            }
        }
        QuerySet::new(records, EmbeddingMatrix::from_rows(spec.dim, rows)?)
    }
}

/// Deterministic planted-topic corpus, embeddings, validation and test
/// queries, and word vectors. Passage `p00007` is the eighth passage;
/// passages are grouped by topic and pages hold [`PAGE_SIZE`] consecutive
/// passages of one topic.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut gen = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let centroids = draw_centroids(&mut gen.rng, spec)?;
    let basis = orthonormal_basis(&centroids);

    let vocab: Vec<Vec<String>> = (0..spec.true_t)
        .map(|t| {
            (0..spec.vocab_per_topic)
                .map(|j| topic_word(t, j))
                .collect()
        })
        .collect();

    let mut passages = Vec::new();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    let mut topic_rows = vec![Vec::new(); spec.true_t];
    for (t, c) in centroids.iter().enumerate() {
        for j in 0..spec.passages_per_topic {
            let id = format!("p{:05}", passages.len());
            let noise = gaussian(&mut gen.rng, spec.dim);
            let v: Vec<f64> = c
                .iter()
                .zip(&noise)
                .map(|(c, n)| c + spec.noise_sigma * n)
                .collect();
            let text = gen.passage_text(&vocab[t]);
            topic_rows[t].push(passages.len());
            labels.push((id.clone(), t));
            passages.push(Passage {
                id,
                page_id: format!("t{t}-pg{:03}", j / PAGE_SIZE),
                text,
            });
            vectors.push(unit(&v));
        }
    }

    let validation = gen.queries("val", &passages, &vectors, &topic_rows, &basis)?;
    let test = gen.queries("test", &passages, &vectors, &topic_rows, &basis)?;

    // word vectors sit near their topic's direction; shared words are random
    let word_scale = 0.5 / (spec.dim as f64).sqrt();
    let mut word_vectors = HashMap::new();
    for (t, words) in vocab.iter().enumerate() {
        for w in words {
            let noise = gaussian(&mut gen.rng, spec.dim);
            let v: Vec<f64> = centroids[t]
                .iter()
                .zip(&noise)
                .map(|(c, n)| c + word_scale * n)
                .collect();
            word_vectors.insert(w.clone(), to_f32(&unit(&v)));
        }
    }
    for w in SHARED_WORDS {
        word_vectors.insert(
            (*w).to_owned(),
            to_f32(&unit(&gaussian(&mut gen.rng, spec.dim))),
        );
    }

    let embeddings = EmbeddingMatrix::from_rows(
        spec.dim,
        passages
            .iter()
            .zip(&vectors)
            .map(|(p, v)| (p.id.clone(), to_f32(v)))
            .collect(),
    )?;
    Ok(SyntheticData {
        corpus: Corpus::new(passages)?,
        embeddings,
        validation,
        test,
        planted: TopicAssignment::new(spec.true_t, labels)?,
        centroids,
        word_vectors,
    })
}
