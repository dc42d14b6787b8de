//! Selecting the number of topics on validation data.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::eval::{retrieve_queries, score_rankings};
use crate::error::{Error, Result};
use crate::index::{build_index, split_by_assignment, ShardedIndex};
use crate::kb::{Corpus, EmbeddingMatrix, QuerySet};
use crate::metrics::Metric;
use crate::par::Parallelism;
use crate::topics::{top_words, topic_coherence, train_topics, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub train: TrainConfig,
    /// Retrieval depth.
    pub k: usize,
    /// Recall cutoff used for selection.
    pub recall_cutoff: usize,
    /// Words per topic fed to coherence.
    pub coherence_words: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            train: TrainConfig::default(),
            k: 10,
            recall_cutoff: 5,
            coherence_words: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub validation_r_at_5: f64,
    pub test_r_at_5: f64,
    pub test_p_at_1: f64,
    /// Absent when no word vectors were supplied or no topic had two
    /// covered words.
    pub coherence: Option<f64>,
    pub shard_sizes: Vec<usize>,
    /// Whether sharded retrieval matched the exhaustive scan on every
    /// validation query.
    pub oracle_agreement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    #[serde(rename = "per_T")]
    pub per_t: BTreeMap<usize, SweepRow>,
    #[serde(rename = "chosen_T")]
    pub chosen_t: usize,
}

/// Largest validation recall, smallest T on ties. Coherence plays no part.
/// Input pairs are (T, validation recall) in ascending T.
pub fn choose_t(recalls: impl IntoIterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (t, recall) in recalls {
        if best.is_none_or(|(_, r)| recall > r) {
            best = Some((t, recall));
        }
    }
    best.map(|(t, _)| t)
}

/// Inputs shared by every T of a sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepData<'a> {
    pub corpus: &'a Corpus,
    pub embeddings: &'a EmbeddingMatrix,
    pub validation: &'a QuerySet,
    pub test: &'a QuerySet,
    pub word_vectors: Option<&'a HashMap<String, Vec<f32>>>,
}

fn oracle_agrees(
    index: &ShardedIndex,
    model: &crate::topics::TopicModel,
    queries: &QuerySet,
    k: usize,
) -> Result<bool> {
    for q in &queries.records {
        let v = queries.vector(&q.id).expect("checked by QuerySet::new");
        let w = model.infer_distribution(v)?;
        let fast = index.retrieve_with(v, w.weights(), k, Parallelism::Sequential)?;
        if fast != index.oracle_retrieve(v, w.weights(), k)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Everything computed for a single T.
pub fn evaluate_t(data: &SweepData<'_>, t: usize, config: &SweepConfig) -> Result<SweepRow> {
    let seq = Parallelism::Sequential;
    let model = train_topics(data.embeddings, t, &config.train, seq)?;
    let assignment = model.assign_all(data.embeddings, seq)?;
    let (index, report) = build_index(
        data.corpus,
        split_by_assignment(data.embeddings, &assignment)?,
    )?;

    let metrics = [Metric::Recall(config.recall_cutoff), Metric::PageP1];
    let val_ranked = retrieve_queries(&index, &model, data.validation, config.k, seq)?;
    let val = score_rankings(
        data.corpus,
        data.validation,
        &val_ranked,
        config.k,
        &metrics,
    )?;
    let test_ranked = retrieve_queries(&index, &model, data.test, config.k, seq)?;
    let test = score_rankings(data.corpus, data.test, &test_ranked, config.k, &metrics)?;

    let coherence = match data.word_vectors {
        Some(wv) => {
            let words = top_words(t, data.corpus, &assignment, config.coherence_words)?;
            topic_coherence(&words, wv).ok()
        }
        None => None,
    };
    Ok(SweepRow {
        validation_r_at_5: val.aggregate.recall_at_k.unwrap_or(0.0),
        test_r_at_5: test.aggregate.recall_at_k.unwrap_or(0.0),
        test_p_at_1: test.aggregate.p_at_1.unwrap_or(0.0),
        coherence,
        shard_sizes: report.shard_sizes,
        oracle_agreement: oracle_agrees(&index, &model, data.validation, config.k)?,
    })
}

/// Trains, shards, indexes and evaluates every T in `t_min..=t_max`.
/// Different T run concurrently under `par`; each T is deterministic on its
/// own, so the result does not depend on scheduling.
pub fn sweep_t(
    data: &SweepData<'_>,
    t_min: usize,
    t_max: usize,
    config: &SweepConfig,
    par: Parallelism,
) -> Result<SweepResult> {
    if t_min < 1 || t_min > t_max {
        return Err(Error::invalid(format!(
            "need 1 <= t-min <= t-max, got {t_min}..{t_max}"
        )));
    }
    if t_max > data.embeddings.len() {
        return Err(Error::invalid(format!(
            "t-max {t_max} exceeds the {} training vectors",
            data.embeddings.len()
        )));
    }
    let ts: Vec<usize> = (t_min..=t_max).collect();
    let rows = par.map(&ts, |&t| evaluate_t(data, t, config));
    let mut per_t = BTreeMap::new();
    for (t, row) in ts.into_iter().zip(rows) {
        per_t.insert(t, row?);
    }
    let chosen_t =
        choose_t(per_t.iter().map(|(&t, r)| (t, r.validation_r_at_5))).expect("at least one T");
    Ok(SweepResult { per_t, chosen_t })
}

fn table(header: &str, cols: &[usize], chosen: &[usize], rows: &[(&str, Vec<String>)]) -> String {
    let mut cells: Vec<Vec<String>> = vec![std::iter::once(header.to_owned())
        .chain(cols.iter().map(|t| {
            if chosen.contains(t) {
                format!("{t}*")
            } else {
                t.to_string()
            }
        }))
        .collect()];
    for (name, values) in rows {
        cells.push(
            std::iter::once((*name).to_owned())
                .chain(values.iter().cloned())
                .collect(),
        );
    }
    let ncols = cells[0].len();
    let widths: Vec<usize> = (0..ncols)
        .map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn pct(v: f64) -> String {
    format!("{:.1}", 100.0 * v)
}

impl SweepResult {
    /// Metrics as rows, T values as columns, chosen T starred.
    pub fn render_table(&self) -> String {
        let ts: Vec<usize> = self.per_t.keys().copied().collect();
        let col = |f: &dyn Fn(&SweepRow) -> String| self.per_t.values().map(f).collect::<Vec<_>>();
        table(
            "Number of Topics (T)",
            &ts,
            &[self.chosen_t],
            &[
                ("Validation R@5", col(&|r| pct(r.validation_r_at_5))),
                ("Test R@5", col(&|r| pct(r.test_r_at_5))),
                ("Test P@1", col(&|r| pct(r.test_p_at_1))),
                (
                    "Coherence",
                    col(&|r| {
                        r.coherence
                            .map_or_else(|| "-".to_owned(), |c| format!("{c:.3}"))
                    }),
                ),
            ],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stdev: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stdev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, stdev })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowSummary {
    pub validation_r_at_5: MeanStd,
    pub test_r_at_5: MeanStd,
    pub test_p_at_1: MeanStd,
    pub coherence: Option<MeanStd>,
}

/// Several sweeps with different seeds, summarized per T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: Vec<SweepResult>,
    #[serde(rename = "per_T")]
    pub per_t: BTreeMap<usize, RowSummary>,
    /// Selection applied to the mean validation recall.
    #[serde(rename = "chosen_T")]
    pub chosen_t: usize,
}

impl RunSummary {
    pub fn new(runs: Vec<SweepResult>) -> Result<Self> {
        let first = runs
            .first()
            .ok_or_else(|| Error::invalid("no runs to summarize"))?;
        let ts: Vec<usize> = first.per_t.keys().copied().collect();
        let mut per_t = BTreeMap::new();
        for &t in &ts {
            let rows: Vec<&SweepRow> = runs
                .iter()
                .map(|r| {
                    r.per_t
                        .get(&t)
                        .ok_or_else(|| Error::invalid(format!("run lacks T = {t}")))
                })
                .collect::<Result<_>>()?;
            let stat = |f: fn(&SweepRow) -> f64| {
                MeanStd::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>()).expect("non-empty")
            };
            let coh: Vec<f64> = rows.iter().filter_map(|r| r.coherence).collect();
            let summary = RowSummary {
                validation_r_at_5: stat(|r| r.validation_r_at_5),
                test_r_at_5: stat(|r| r.test_r_at_5),
                test_p_at_1: stat(|r| r.test_p_at_1),
                coherence: (coh.len() == rows.len())
                    .then(|| MeanStd::of(&coh))
                    .flatten(),
            };
            per_t.insert(t, summary);
        }
        let chosen_t = choose_t(per_t.iter().map(|(&t, r)| (t, r.validation_r_at_5.mean)))
            .expect("at least one T");
        Ok(RunSummary {
            runs,
            per_t,
            chosen_t,
        })
    }

    pub fn render_table(&self) -> String {
        let ts: Vec<usize> = self.per_t.keys().copied().collect();
        let ms = |m: &MeanStd| format!("{}±{}", pct(m.mean), pct(m.stdev));
        let col =
            |f: &dyn Fn(&RowSummary) -> String| self.per_t.values().map(f).collect::<Vec<_>>();
        table(
            "Number of Topics (T)",
            &ts,
            &[self.chosen_t],
            &[
                ("Validation R@5", col(&|r| ms(&r.validation_r_at_5))),
                ("Test R@5", col(&|r| ms(&r.test_r_at_5))),
                ("Test P@1", col(&|r| ms(&r.test_p_at_1))),
                (
                    "Coherence",
                    col(&|r| {
                        r.coherence.map_or_else(
                            || "-".to_owned(),
                            |c| format!("{:.3}±{:.3}", c.mean, c.stdev),
                        )
                    }),
                ),
            ],
        )
    }
}
