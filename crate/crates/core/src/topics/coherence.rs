use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg;

/// Mean over topics of the mean pairwise cosine between a topic's words,
/// using external word vectors. Words without a (nonzero) vector are skipped;
/// topics left with fewer than two words do not count.
pub fn topic_coherence<S: AsRef<str>>(
    topics: &[Vec<S>],
    word_vectors: &HashMap<String, Vec<f32>>,
) -> Result<f64> {
    let mut per_topic = Vec::new();
    for words in topics {
        let vecs: Vec<&[f32]> = words
            .iter()
            .filter_map(|w| word_vectors.get(w.as_ref()))
            .map(Vec::as_slice)
            .filter(|v| linalg::norm(v) > 0.0)
            .collect();
        if vecs.len() < 2 {
            continue;
        }
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..vecs.len() {
            for j in i + 1..vecs.len() {
                sum += linalg::cosine(vecs[i], vecs[j]).expect("nonzero norms");
                pairs += 1;
            }
        }
        per_topic.push(sum / pairs as f64);
    }
    if per_topic.is_empty() {
        return Err(Error::invalid(
            "no topic has at least two words with word vectors",
        ));
    }
    Ok(per_topic.iter().sum::<f64>() / per_topic.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vectors(entries: &[(&str, [f32; 2])]) -> HashMap<String, Vec<f32>> {
        entries
            .iter()
            .map(|(w, v)| (w.to_string(), v.to_vec()))
            .collect()
    }

    #[test]
    fn identical_vectors_score_one() {
        let wv = vectors(&[("a", [0.3, 0.4]), ("b", [0.3, 0.4]), ("c", [0.6, 0.8])]);
        let s = topic_coherence(&[vec!["a", "b", "c"]], &wv).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_pair_scores_zero() {
        let wv = vectors(&[("x", [1.0, 0.0]), ("y", [0.0, 1.0])]);
        assert_eq!(topic_coherence(&[vec!["x", "y"]], &wv).unwrap(), 0.0);
    }

    #[test]
    fn mean_of_topic_means() {
        // topic A pairs: 0, 1/sqrt2, 1/sqrt2 -> sqrt2/3
        // topic B pairs: 1, -1, -1 -> -1/3
        let wv = vectors(&[
            ("a1", [1.0, 0.0]),
            ("a2", [0.0, 1.0]),
            ("a3", [1.0, 1.0]),
            ("b1", [1.0, 0.0]),
            ("b2", [2.0, 0.0]),
            ("b3", [-1.0, 0.0]),
        ]);
        let s = topic_coherence(
            &[vec!["a1", "a2", "a3", "unknown"], vec!["b1", "b2", "b3"]],
            &wv,
        )
        .unwrap();
        let expected = (2f64.sqrt() - 1.0) / 6.0;
        assert!((s - expected).abs() < 1e-7, "{s} vs {expected}");
    }

    #[test]
    fn needs_a_covered_topic() {
        let wv = vectors(&[("x", [1.0, 0.0])]);
        assert!(topic_coherence(&[vec!["x", "nope"], vec![]], &wv).is_err());
    }
}
