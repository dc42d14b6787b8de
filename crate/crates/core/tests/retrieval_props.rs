mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use topicshard::index::{shard_topk, ShardedIndex};
use topicshard::kb::EmbeddingMatrix;
use topicshard::par::Parallelism;

fn mat(rows: &[(&str, &[f32])]) -> EmbeddingMatrix {
    let dim = rows.first().map_or(2, |r| r.1.len());
    EmbeddingMatrix::from_rows(
        dim,
        rows.iter()
            .map(|(i, v)| (i.to_string(), v.to_vec()))
            .collect(),
    )
    .unwrap()
}

fn ids(r: &[topicshard::index::ScoredPassage]) -> Vec<&str> {
    r.iter().map(|s| s.passage_id.as_str()).collect()
}

#[test]
fn two_shard_example_against_brute_force() {
    let index = ShardedIndex::from_shards(vec![
        mat(&[("p1", &[1.0, 0.0]), ("p2", &[0.8, 0.0])]),
        mat(&[("p3", &[0.0, 1.0]), ("p4", &[0.0, 0.5])]),
    ])
    .unwrap();
    let q = [1.0, 1.0];
    let w = [0.25, 0.75];
    let expected = common::weighted_brute_force(&index, &q, &w, 2);
    assert_eq!(
        expected,
        vec![("p3".to_string(), 0.75), ("p4".to_string(), 0.375)]
    );
    let got = index.retrieve(&q, &w, 2).unwrap();
    let got: Vec<(String, f64)> = got.into_iter().map(|s| (s.passage_id, s.score)).collect();
    assert_eq!(got, expected);

    let top = shard_topk(index.shard(0), &q, 1).unwrap();
    assert_eq!(ids(&top), vec!["p1"]);
    assert_eq!(top[0].raw_dot, 1.0);
}

#[test]
fn k_beyond_total_returns_everything_sorted() {
    let mut r = common::rng(4);
    let index = common::random_index(&mut r, 17, 6, 3);
    let q = common::random_vector(&mut r, 6);
    let w = [0.2, 0.5, 0.3];
    let got = index.retrieve(&q, &w, 100).unwrap();
    assert_eq!(got.len(), 17);
    assert_eq!(got, index.oracle_retrieve(&q, &w, 100).unwrap());
    assert!(got.windows(2).all(|p| p[0].score >= p[1].score));
}

#[test]
fn five_hundred_passage_instance() {
    let mut r = common::rng(500);
    let index = common::random_index(&mut r, 500, 32, 8);
    for _ in 0..100 {
        let q = common::random_vector(&mut r, 32);
        let w = common::random_weights(&mut r, 8);
        for k in [1, 5, 10] {
            let fast = index.retrieve(&q, &w, k).unwrap();
            assert_eq!(fast, index.oracle_retrieve(&q, &w, k).unwrap());
            let brute = common::weighted_brute_force(&index, &q, &w, k);
            let fast: Vec<(String, f64)> =
                fast.into_iter().map(|s| (s.passage_id, s.score)).collect();
            assert_eq!(fast, brute);
        }
    }
}

#[test]
fn single_topic_is_plain_dense_search() {
    let mut r = common::rng(1);
    let emb = common::random_matrix(&mut r, "p", 200, 16);
    let index = ShardedIndex::from_shards(vec![emb.clone()]).unwrap();
    for _ in 0..20 {
        let q = common::random_vector(&mut r, 16);
        let got = index.retrieve(&q, &[1.0], 10).unwrap();
        assert_eq!(ids(&got), common::flat_topk(&emb, &q, 10));
        assert!(got.iter().all(|s| s.score == s.raw_dot && s.topic_id == 0));
    }
}

#[test]
fn batch_matches_single_queries_in_both_modes() {
    let mut r = common::rng(8);
    let index = common::random_index(&mut r, 150, 12, 5);
    let queries: Vec<(Vec<f32>, Vec<f64>)> = (0..30)
        .map(|_| {
            (
                common::random_vector(&mut r, 12),
                common::random_weights(&mut r, 5),
            )
        })
        .collect();
    let refs: Vec<(&[f32], &[f64])> = queries
        .iter()
        .map(|(q, w)| (q.as_slice(), w.as_slice()))
        .collect();
    let seq = index
        .retrieve_batch(&refs, 7, Parallelism::Sequential)
        .unwrap();
    let par = index
        .retrieve_batch(&refs, 7, Parallelism::Parallel)
        .unwrap();
    assert_eq!(seq, par);
    for ((q, w), got) in queries.iter().zip(&seq) {
        assert_eq!(
            got,
            &index.retrieve_with(q, w, 7, Parallelism::Parallel).unwrap()
        );
    }
}

#[test]
fn index_directory_round_trip_preserves_results() {
    let mut r = common::rng(5);
    let index = common::random_index(&mut r, 60, 8, 4);
    let dir = tempfile::tempdir().unwrap();
    topicshard::index::save_index(dir.path(), &index, "h").unwrap();
    let (loaded, _) = topicshard::index::load_index(dir.path()).unwrap();
    let q = common::random_vector(&mut r, 8);
    let w = [0.1, 0.2, 0.3, 0.4];
    assert_eq!(
        index.retrieve(&q, &w, 10).unwrap(),
        loaded.retrieve(&q, &w, 10).unwrap()
    );
}

#[test]
fn build_from_assignment_histogram() {
    use topicshard::index::{build_index, split_by_assignment};
    use topicshard::kb::{Corpus, Passage};
    use topicshard::topics::TopicAssignment;

    let mut r = common::rng(13);
    let emb = common::random_matrix(&mut r, "p", 40, 4);
    let labels: Vec<(String, usize)> = emb
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), (i * 7) % 5))
        .collect();
    let mut hist = vec![0usize; 5];
    labels.iter().for_each(|(_, t)| hist[*t] += 1);
    let corpus = Corpus::new(
        emb.ids()
            .iter()
            .map(|id| Passage {
                id: id.clone(),
                page_id: "pg".into(),
                text: String::new(),
            })
            .collect(),
    )
    .unwrap();
    let assignment = TopicAssignment::new(5, labels).unwrap();
    let (_, report) =
        build_index(&corpus, split_by_assignment(&emb, &assignment).unwrap()).unwrap();
    assert_eq!(report.shard_sizes, hist);
    assert_eq!(report.total_passages, 40);

    let mut dup = BTreeMap::new();
    dup.insert(0, emb.select(&[0, 1]));
    dup.insert(1, emb.select(&[1]));
    let err = build_index(&corpus, dup).unwrap_err();
    assert!(err.to_string().contains(&format!("\"{}\"", emb.ids()[1])));
}

fn instance() -> impl Strategy<Value = (u64, usize, usize, usize, usize)> {
    // seed, passages, dim, T, K
    (
        any::<u64>(),
        1usize..120,
        1usize..10,
        1usize..7,
        prop_oneof![Just(1usize), Just(5), Just(10), 1usize..30],
    )
}

proptest! {
    #[test]
    fn sharded_equals_exhaustive((seed, n, dim, t, k) in instance()) {
        let mut r = common::rng(seed);
        let index = common::random_index(&mut r, n, dim, t);
        let q = common::random_vector(&mut r, dim);
        let w = common::random_weights(&mut r, t);
        let fast = index.retrieve(&q, &w, k).unwrap();
        prop_assert_eq!(fast.len(), k.min(n));
        prop_assert_eq!(&fast, &index.oracle_retrieve(&q, &w, k).unwrap());
        for s in &fast {
            if w[s.topic_id] == 0.0 {
                prop_assert!(s.score == 0.0 && s.score.is_sign_positive());
            }
            prop_assert_eq!(s.score, s.raw_dot * w[s.topic_id] + 0.0);
        }
    }

    #[test]
    fn rescaled_weights_keep_the_ranking((seed, n, dim, t, k) in instance(), c in prop_oneof![Just(0.5f64), Just(2.0), Just(10.0), 0.01f64..100.0]) {
        let mut r = common::rng(seed);
        let index = common::random_index(&mut r, n, dim, t);
        let q = common::random_vector(&mut r, dim);
        let w = common::random_weights(&mut r, t);
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let a = index.retrieve(&q, &w, k).unwrap();
        let b = index.retrieve(&q, &scaled, k).unwrap();
        prop_assert_eq!(ids(&a), ids(&b));
    }

    #[test]
    fn repeated_calls_agree((seed, n, dim, t, k) in instance()) {
        let mut r = common::rng(seed);
        let index = common::random_index(&mut r, n, dim, t);
        let q = common::random_vector(&mut r, dim);
        let w = common::random_weights(&mut r, t);
        let a = index.retrieve_with(&q, &w, k, Parallelism::Parallel).unwrap();
        let b = index.retrieve_with(&q, &w, k, Parallelism::Sequential).unwrap();
        prop_assert_eq!(a, b);
    }
}
