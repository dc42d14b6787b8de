//! Helpers shared by the integration tests, including reference
//! implementations written independently of the library code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topicshard::index::ShardedIndex;
use topicshard::kb::EmbeddingMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingMatrix {
    EmbeddingMatrix::from_rows(
        dim,
        (0..n)
            .map(|i| (format!("{prefix}{i:04}"), random_vector(rng, dim)))
            .collect(),
    )
    .unwrap()
}

/// Index whose rows each land in a uniformly random shard.
pub fn random_index(rng: &mut ChaCha8Rng, n: usize, dim: usize, t: usize) -> ShardedIndex {
    let mut rows: Vec<Vec<(String, Vec<f32>)>> = vec![Vec::new(); t];
    for i in 0..n {
        let s = rng.random_range(0..t);
        rows[s].push((format!("p{i:04}"), random_vector(rng, dim)));
    }
    ShardedIndex::from_shards(
        rows.into_iter()
            .map(|r| EmbeddingMatrix::from_rows(dim, r).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Topic weights drawn as a random simplex point, a one-hot, or a simplex
/// point with some entries forced to zero.
pub fn random_weights(rng: &mut ChaCha8Rng, t: usize) -> Vec<f64> {
    let mode = rng.random_range(0..3);
    let mut w: Vec<f64> = match mode {
        0 => (0..t).map(|_| rng.random_range(0.0..1.0)).collect(),
        1 => {
            let hot = rng.random_range(0..t);
            (0..t).map(|i| if i == hot { 1.0 } else { 0.0 }).collect()
        }
        _ => (0..t)
            .map(|_| {
                if rng.random_bool(0.5) {
                    0.0
                } else {
                    rng.random_range(0.0..1.0)
                }
            })
            .collect(),
    };
    let sum: f64 = w.iter().sum();
    if sum == 0.0 {
        w[0] = 1.0;
    } else {
        w.iter_mut().for_each(|x| *x /= sum);
    }
    w
}

/// Sequential f64 dot product over f32 inputs.
pub fn ref_dot(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0.0f64;
    for i in 0..a.len() {
        s += f64::from(a[i]) * f64::from(b[i]);
    }
    s
}

/// Full sort of every (id, score) pair: score descending, id ascending.
pub fn ref_rank(mut scored: Vec<(String, f64)>, k: usize) -> Vec<(String, f64)> {
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Plain dense top-K over one matrix, no shards and no weights.
pub fn flat_topk(emb: &EmbeddingMatrix, q: &[f32], k: usize) -> Vec<String> {
    let scored = emb
        .rows()
        .map(|(id, v)| (id.to_owned(), ref_dot(q, v)))
        .collect();
    ref_rank(scored, k).into_iter().map(|(id, _)| id).collect()
}

/// Weighted brute force over an index: every passage scored as
/// raw dot times its shard weight.
pub fn weighted_brute_force(
    index: &ShardedIndex,
    q: &[f32],
    w: &[f64],
    k: usize,
) -> Vec<(String, f64)> {
    let mut scored = Vec::new();
    for shard in index.shards() {
        for (id, v) in shard.embeddings().rows() {
            let s = ref_dot(q, v) * w[shard.topic_id()];
            scored.push((id.to_owned(), if s == 0.0 { 0.0 } else { s }));
        }
    }
    ref_rank(scored, k)
}
