//! Spherical k-means with k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TopicModel;
use crate::error::{Error, Result};
use crate::kb::EmbeddingMatrix;
use crate::linalg;
use crate::par::Parallelism;

/// Cosine distances at or below this count as the same direction.
const SAME_DIRECTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_iters: usize,
    /// Stop once the fraction of vectors changing cluster drops below this.
    pub tolerance: f64,
    pub seed: u64,
    pub temperature: f32,
    /// Independent seedings; the one with the highest total cosine wins.
    pub restarts: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_iters: 100,
            tolerance: 1e-4,
            seed: 0,
            temperature: 1.0,
            restarts: 1,
        }
    }
}

struct Fit {
    centroids: Vec<f64>,
    objective: f64,
}

/// Clusters the rows of `emb` into `num_topics` directions.
pub fn train_topics(
    emb: &EmbeddingMatrix,
    num_topics: usize,
    config: &TrainConfig,
    par: Parallelism,
) -> Result<TopicModel> {
    if num_topics < 1 {
        return Err(Error::invalid("number of topics must be at least 1"));
    }
    if num_topics > emb.len() {
        return Err(Error::invalid(format!(
            "cannot train {num_topics} topics on {} vectors",
            emb.len()
        )));
    }
    if config.restarts < 1 {
        return Err(Error::invalid("restarts must be at least 1"));
    }
    let dim = emb.dim();
    let mut data = Vec::with_capacity(emb.len() * dim);
    for (id, v) in emb.rows() {
        let u = linalg::normalized(v)
            .ok_or_else(|| Error::invalid(format!("vector \"{id}\" has zero norm")))?;
        data.extend(u);
    }

    let mut best: Option<Fit> = None;
    for restart in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let fit = lloyd(&data, dim, num_topics, config, &mut rng, par)?;
        if best.as_ref().is_none_or(|b| fit.objective > b.objective) {
            best = Some(fit);
        }
    }
    let centroids = best
        .expect("at least one restart")
        .centroids
        .into_iter()
        .map(|v| v as f32)
        .collect();
    Ok(TopicModel::new(dim, centroids, config.temperature)?.with_trained_on(emb.len()))
}

fn lloyd(
    data: &[f64],
    dim: usize,
    k: usize,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    par: Parallelism,
) -> Result<Fit> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut centroids = seed_plus_plus(data, dim, k, rng)?;

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut objective = 0.0;
    for _ in 0..config.max_iters.max(1) {
        let assigned = par.map_range(n, |i| nearest(row(i), &centroids, dim));
        let changed = assigned
            .iter()
            .zip(&labels)
            .filter(|((t, _), old)| Some(*t) != **old)
            .count();
        objective = assigned.iter().map(|(_, c)| c).sum();
        labels = assigned.iter().map(|(t, _)| Some(*t)).collect();

        let mut sums = vec![0.0f64; k * dim];
        for (i, (t, _)) in assigned.iter().enumerate() {
            for (s, x) in sums[t * dim..(t + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for t in 0..k {
            let s = &sums[t * dim..(t + 1) * dim];
            let norm = linalg::norm64(s);
            // empty or cancelling clusters keep their previous centroid
            if norm > 0.0 {
                for (c, x) in centroids[t * dim..(t + 1) * dim].iter_mut().zip(s) {
                    *c = x / norm;
                }
            }
        }
        if (changed as f64) / (n as f64) < config.tolerance {
            break;
        }
    }
    Ok(Fit {
        centroids,
        objective,
    })
}

/// Best centroid by cosine (rows and centroids are unit), ties to lowest.
fn nearest(x: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (t, c) in centroids.chunks_exact(dim).enumerate() {
        let s = linalg::dot64(x, c);
        if s > best.1 {
            best = (t, s);
        }
    }
    best
}

fn seed_plus_plus(data: &[f64], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let first = rng.random_range(0..n);
    let mut centroids = row(first).to_vec();
    // 1 - cos to the nearest chosen centroid; proportional to squared chord length
    let mut dist: Vec<f64> = (0..n)
        .map(|i| (1.0 - linalg::dot64(row(i), row(first))).max(0.0))
        .collect();
    for _ in 1..k {
        let total: f64 = dist.iter().filter(|&&d| d > SAME_DIRECTION).sum();
        if total <= 0.0 {
            return Err(Error::invalid(format!(
                "fewer distinct directions than T = {k}"
            )));
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in dist.iter().enumerate() {
            if d <= SAME_DIRECTION {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        let pick = pick.expect("total > 0 implies a candidate");
        centroids.extend_from_slice(row(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = (1.0 - linalg::dot64(row(i), row(pick))).max(0.0);
            if nd < *d {
                *d = nd;
            }
        }
    }
    Ok(centroids)
}
