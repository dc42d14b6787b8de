use std::collections::{BTreeMap, HashMap};

use super::stopwords::is_stopword;
use super::TopicAssignment;
use crate::error::{Error, Result};
use crate::kb::Corpus;
use crate::text::tokenize;

/// Top `n` keywords per topic.
///
/// A term's score in topic t is its frequency over topic-t passages times
/// `ln(T / number of topics containing the term)`. Positive-score terms are
/// ranked by score, then lexicographically. Terms scoring zero (present in
/// every topic) only fill slots left over, ranked by frequency then
/// lexicographically. Topics without passages get an empty list.
pub fn top_words(
    num_topics: usize,
    corpus: &Corpus,
    assignment: &TopicAssignment,
    n: usize,
) -> Result<Vec<Vec<String>>> {
    if n < 1 {
        return Err(Error::invalid("number of top words must be at least 1"));
    }
    if assignment.num_topics() != num_topics {
        return Err(Error::invalid(format!(
            "assignment has {} topics, model has {num_topics}",
            assignment.num_topics()
        )));
    }
    assignment.check_total(corpus)?;

    let mut tf: Vec<HashMap<String, u64>> = vec![HashMap::new(); num_topics];
    for p in corpus.passages() {
        let t = assignment.get(&p.id).expect("checked total");
        for tok in tokenize(&p.text) {
            if !is_stopword(&tok) {
                *tf[t].entry(tok).or_default() += 1;
            }
        }
    }
    let mut topic_df: BTreeMap<&str, usize> = BTreeMap::new();
    for counts in &tf {
        for term in counts.keys() {
            *topic_df.entry(term.as_str()).or_default() += 1;
        }
    }

    let t_total = num_topics as f64;
    Ok(tf
        .iter()
        .map(|counts| {
            let mut scored: Vec<(&str, u64, f64)> = counts
                .iter()
                .map(|(term, &f)| {
                    let idf = (t_total / topic_df[term.as_str()] as f64).ln();
                    (term.as_str(), f, f as f64 * idf)
                })
                .collect();
            scored.sort_by(|a, b| {
                let (pa, pb) = (a.2 > 0.0, b.2 > 0.0);
                pb.cmp(&pa)
                    .then_with(|| {
                        if pa {
                            b.2.total_cmp(&a.2)
                        } else {
                            b.1.cmp(&a.1)
                        }
                    })
                    .then_with(|| a.0.cmp(b.0))
            });
            scored
                .into_iter()
                .take(n)
                .map(|(term, _, _)| term.to_owned())
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Passage;

    fn setup(docs: &[(&str, usize)], t: usize) -> (Corpus, TopicAssignment) {
        let passages = docs
            .iter()
            .enumerate()
            .map(|(i, (text, _))| Passage {
                id: format!("p{i}"),
                page_id: "pg".into(),
                text: text.to_string(),
            })
            .collect();
        let labels = docs
            .iter()
            .enumerate()
            .map(|(i, (_, topic))| (format!("p{i}"), *topic))
            .collect();
        (
            Corpus::new(passages).unwrap(),
            TopicAssignment::new(t, labels).unwrap(),
        )
    }

    #[test]
    fn term_frequency_times_topic_idf() {
        // red: tf 4 * ln 2, blue: tf 2 * ln 2; other topic shares neither
        let (c, a) = setup(
            &[
                ("red red blue", 0),
                ("Red, red; blue!", 0),
                ("green tree", 1),
            ],
            2,
        );
        let words = top_words(2, &c, &a, 2).unwrap();
        assert_eq!(words[0], vec!["red", "blue"]);
        assert_eq!(words[1], vec!["green", "tree"]);
    }

    #[test]
    fn shared_terms_only_fill_leftover_slots() {
        let (c, a) = setup(&[("river river river city", 0), ("river band", 1)], 2);
        let words = top_words(2, &c, &a, 3).unwrap();
        // "river" is in both topics: score 0 despite tf 3
        assert_eq!(words[0], vec!["city", "river"]);
        assert_eq!(words[1], vec!["band", "river"]);
    }

    #[test]
    fn empty_topic_and_stopwords() {
        let (c, a) = setup(&[("the cat and the hat", 0)], 3);
        let words = top_words(3, &c, &a, 5).unwrap();
        assert_eq!(words[0], vec!["cat", "hat"]);
        assert!(words[1].is_empty() && words[2].is_empty());
        assert!(top_words(3, &c, &a, 0).is_err());
    }

    #[test]
    fn score_ties_are_lexicographic() {
        let (c, a) = setup(&[("zeta alpha mid", 0), ("other", 1)], 2);
        assert_eq!(
            top_words(2, &c, &a, 3).unwrap()[0],
            vec!["alpha", "mid", "zeta"]
        );
    }
}
