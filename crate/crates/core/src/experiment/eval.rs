use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::index::{ScoredPassage, ShardedIndex};
use crate::kb::{Corpus, QueryRecord, QuerySet};
use crate::metrics::{self, EvalReport, Metric, QueryMetrics};
use crate::par::Parallelism;
use crate::topics::DistributionProvider;

/// Ranked passages for every query in `queries`, in query order.
pub fn retrieve_queries(
    index: &ShardedIndex,
    provider: &dyn DistributionProvider,
    queries: &QuerySet,
    k: usize,
    par: Parallelism,
) -> Result<Vec<Vec<ScoredPassage>>> {
    if provider.num_topics() != index.num_topics() {
        return Err(Error::invalid(format!(
            "topic source has {} topics but the index has {} shards",
            provider.num_topics(),
            index.num_topics()
        )));
    }
    par.map(&queries.records, |q| {
        let v = queries.vector(&q.id).expect("checked by QuerySet::new");
        let w = provider.distribution(&q.id, v)?;
        index.retrieve_with(v, w.weights(), k, Parallelism::Sequential)
    })
    .into_iter()
    .collect()
}

fn require<'a, T>(
    q: &'a QueryRecord,
    field: Option<&'a T>,
    name: &str,
    metric: Metric,
) -> Result<&'a T> {
    field.ok_or_else(|| {
        Error::MissingField(format!(
            "query \"{}\" has no {name}, which {metric} needs",
            q.id
        ))
    })
}

fn check_fields(queries: &QuerySet, metrics: &[Metric]) -> Result<()> {
    for q in &queries.records {
        for &m in metrics {
            match m {
                Metric::Recall(_) => {
                    require(q, q.gold_passage_ids.as_ref(), "gold_passage_ids", m)?;
                }
                Metric::PageP1 => {
                    require(q, q.gold_page_id.as_ref(), "gold_page_id", m)?;
                }
                Metric::F1 | Metric::KiltF1 => {
                    require(q, q.reference_response.as_ref(), "reference_response", m)?;
                    require(q, q.candidate_response.as_ref(), "candidate_response", m)?;
                    if m == Metric::KiltF1 {
                        require(q, q.gold_page_id.as_ref(), "gold_page_id", m)?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// Scores already-computed rankings. `ranked[i]` belongs to
/// `queries.records[i]`.
pub fn score_rankings(
    corpus: &Corpus,
    queries: &QuerySet,
    ranked: &[Vec<ScoredPassage>],
    k: usize,
    metrics: &[Metric],
) -> Result<EvalReport> {
    check_fields(queries, metrics)?;
    let mut recall_cutoff = None;
    for m in metrics {
        if let Metric::Recall(c) = *m {
            if recall_cutoff.is_some_and(|prev| prev != c) {
                return Err(Error::Usage("only one recall cutoff per run".into()));
            }
            if c > k {
                return Err(Error::Usage(format!(
                    "recall cutoff {c} exceeds retrieval depth K = {k}"
                )));
            }
            recall_cutoff = Some(c);
        }
    }
    let wants = |m: Metric| metrics.contains(&m);

    let mut per_query = BTreeMap::new();
    for (q, ranked) in queries.records.iter().zip(ranked) {
        let ids: Vec<&str> = ranked.iter().map(|s| s.passage_id.as_str()).collect();
        let mut m = QueryMetrics {
            history_length_tokens: q.history_length_tokens(),
            ..QueryMetrics::default()
        };
        if let (Some(c), Some(gold)) = (recall_cutoff, &q.gold_passage_ids) {
            m.recall_at_k = Some(metrics::recall_at_k(&ids, gold, c)?);
        }
        let page_hit = match (&q.gold_page_id, ids.first()) {
            (Some(gold), Some(top)) => Some(metrics::precision_at_1_page(top, gold, corpus)?),
            (Some(_), None) => Some(0),
            _ => None,
        };
        if wants(Metric::PageP1) {
            m.p_at_1 = page_hit;
        }
        if wants(Metric::F1) || wants(Metric::KiltF1) {
            let f1 = metrics::unigram_f1(
                q.candidate_response.as_deref().unwrap_or_default(),
                q.reference_response.as_deref().unwrap_or_default(),
            );
            if wants(Metric::F1) {
                m.f1 = Some(f1);
            }
            if wants(Metric::KiltF1) {
                m.kilt_f1 = Some(metrics::kilt_f1(f1, page_hit.unwrap_or(0)));
            }
        }
        if per_query.insert(q.id.clone(), m).is_some() {
            return Err(Error::DuplicateId {
                id: q.id.clone(),
                context: Some("query set".into()),
            });
        }
    }
    Ok(EvalReport::from_queries(k, recall_cutoff, per_query))
}

/// Retrieves every query with its topic distribution and scores the
/// requested metrics.
pub fn run_eval(
    index: &ShardedIndex,
    provider: &dyn DistributionProvider,
    corpus: &Corpus,
    queries: &QuerySet,
    k: usize,
    metrics: &[Metric],
    par: Parallelism,
) -> Result<EvalReport> {
    check_fields(queries, metrics)?;
    let ranked = retrieve_queries(index, provider, queries, k, par)?;
    score_rankings(corpus, queries, &ranked, k, metrics)
}
