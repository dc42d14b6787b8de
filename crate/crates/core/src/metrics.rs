//! Retrieval and response metrics.
//!
//! All text metrics share [`crate::text::answer_tokens`]. Aggregates are
//! plain means over the queries where a metric is defined.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::kb::Corpus;
use crate::text::answer_tokens;

/// Fraction of `gold` found in the first `k` entries of `retrieved`.
pub fn recall_at_k<S: AsRef<str>>(
    retrieved: &[S],
    gold: &std::collections::BTreeSet<String>,
    k: usize,
) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::invalid("recall needs a non-empty gold set"));
    }
    if k < 1 {
        return Err(Error::invalid("K must be at least 1"));
    }
    let mut hits = 0usize;
    let mut seen = std::collections::HashSet::new();
    for id in retrieved.iter().take(k).map(AsRef::as_ref) {
        if gold.contains(id) && seen.insert(id) {
            hits += 1;
        }
    }
    Ok(hits as f64 / gold.len() as f64)
}

/// 1 when the top-ranked passage lies on the gold page.
pub fn precision_at_1_page(
    top1_passage_id: &str,
    gold_page_id: &str,
    corpus: &Corpus,
) -> Result<u8> {
    let page = corpus
        .page_of(top1_passage_id)
        .ok_or_else(|| Error::UnknownId(top1_passage_id.to_owned()))?;
    Ok(u8::from(page == gold_page_id))
}

/// Harmonic mean of token precision and recall under multiset overlap.
pub fn unigram_f1(candidate: &str, reference: &str) -> f64 {
    let cand = answer_tokens(candidate);
    let refs = answer_tokens(reference);
    if cand.is_empty() || refs.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &refs {
        *counts.entry(t).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &cand {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / cand.len() as f64;
    let r = overlap as f64 / refs.len() as f64;
    2.0 * p * r / (p + r)
}

/// F1 that only counts when the top-1 page was right.
pub fn kilt_f1(f1: f64, page_hit: u8) -> f64 {
    if page_hit == 1 {
        f1
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-tailed, from a t statistic with n − 2 degrees of freedom. Absent
    /// when n = 2 (no degrees of freedom left).
    pub p_value: Option<f64>,
}

/// Sample Pearson correlation between history length and F1.
pub fn pearson_length_f1(pairs: &[(f64, f64)]) -> Result<Correlation> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "correlation needs at least 2 pairs, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("correlation is undefined for zero variance"));
    }
    // one square root keeps exactly linear data at exactly ±1
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p_value = (n > 2).then(|| {
        let df = nf - 2.0;
        if r.abs() == 1.0 {
            return 0.0;
        }
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        2.0 * dist.sf(t.abs())
    });
    Ok(Correlation { r, p_value })
}

/// A metric requested for an evaluation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    /// Passage recall at the given cutoff.
    Recall(usize),
    PageP1,
    F1,
    KiltF1,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "p@1" => Ok(Metric::PageP1),
            "f1" => Ok(Metric::F1),
            "kilt-f1" | "kilt_f1" => Ok(Metric::KiltF1),
            _ => lower
                .strip_prefix("r@")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .map(Metric::Recall)
                .ok_or_else(|| {
                    Error::Usage(format!(
                        "unknown metric \"{s}\" (expected r@<k>, p@1, f1 or kilt-f1)"
                    ))
                }),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Recall(k) => write!(f, "r@{k}"),
            Metric::PageP1 => f.write_str("p@1"),
            Metric::F1 => f.write_str("f1"),
            Metric::KiltF1 => f.write_str("kilt-f1"),
        }
    }
}

/// Parses a comma-separated metric list such as `r@5,p@1`.
pub fn parse_metrics(list: &str) -> Result<Vec<Metric>> {
    let mut out: Vec<Metric> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Usage("no metrics requested".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_at_1: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kilt_f1: Option<f64>,
    pub history_length_tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_at_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_at_1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kilt_f1: Option<f64>,
    pub history_length_tokens: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Retrieval depth.
    pub k_used: usize,
    /// Cutoff of the recall column, when recall was requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recall_cutoff: Option<usize>,
    pub aggregate: Aggregate,
    pub per_query: BTreeMap<String, QueryMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pearson_length_f1: Option<Correlation>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl EvalReport {
    /// Assembles aggregates from per-query values. The length/F1 correlation
    /// is reported when it is defined for the queries that have an F1.
    pub fn from_queries(
        k_used: usize,
        recall_cutoff: Option<usize>,
        per_query: BTreeMap<String, QueryMetrics>,
    ) -> Self {
        let q = || per_query.values();
        let aggregate = Aggregate {
            recall_at_k: mean(q().filter_map(|m| m.recall_at_k)),
            p_at_1: mean(q().filter_map(|m| m.p_at_1.map(f64::from))),
            f1: mean(q().filter_map(|m| m.f1)),
            kilt_f1: mean(q().filter_map(|m| m.kilt_f1)),
            history_length_tokens: mean(q().map(|m| m.history_length_tokens as f64)).unwrap_or(0.0),
        };
        let pairs: Vec<(f64, f64)> = q()
            .filter_map(|m| m.f1.map(|f| (m.history_length_tokens as f64, f)))
            .collect();
        let pearson_length_f1 = pearson_length_f1(&pairs).ok();
        EvalReport {
            k_used,
            recall_cutoff,
            aggregate,
            per_query,
            pearson_length_f1,
        }
    }

    /// Aligned two-column table of the aggregate values.
    pub fn render_table(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        let fmt = |v: f64| format!("{v:.4}");
        if let (Some(v), Some(k)) = (self.aggregate.recall_at_k, self.recall_cutoff) {
            rows.push((format!("R@{k}"), fmt(v)));
        }
        if let Some(v) = self.aggregate.p_at_1 {
            rows.push(("P@1".into(), fmt(v)));
        }
        if let Some(v) = self.aggregate.f1 {
            rows.push(("F1".into(), fmt(v)));
        }
        if let Some(v) = self.aggregate.kilt_f1 {
            rows.push(("KILT-F1".into(), fmt(v)));
        }
        rows.push((
            "history tokens".into(),
            format!("{:.2}", self.aggregate.history_length_tokens),
        ));
        if let Some(c) = self.pearson_length_f1 {
            let p = c
                .p_value
                .map_or_else(|| "n/a".to_owned(), |p| format!("{p:.4}"));
            rows.push(("pearson(len, F1)".into(), format!("{:.4} (p={p})", c.r)));
        }
        rows.push(("queries".into(), self.per_query.len().to_string()));
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, value) in rows {
            out.push_str(&format!("{name:<width$}  {value}\n"));
        }
        out
    }
}
