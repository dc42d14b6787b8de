//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use topicshard::experiment::{generate_synthetic, sweep_t, SweepConfig, SweepData, SyntheticSpec};
use topicshard::index::ShardedIndex;
use topicshard::kb::EmbeddingMatrix;
use topicshard::metrics::{kilt_f1, pearson_length_f1, recall_at_k, unigram_f1};
use topicshard::par::Parallelism;
use topicshard::topics::{TopicModel, TrainConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = common::rng(2024);
    let mut instances = 0;
    let mut zero_weight_instances = 0;
    let mut one_hot_instances = 0;
    for _ in 0..240 {
        let n = r.random_range(1..=500);
        let dim = r.random_range(1..=32);
        let t = r.random_range(1..=8);
        let index = common::random_index(&mut r, n, dim, t);
        let q = common::random_vector(&mut r, dim);
        let w = common::random_weights(&mut r, t);
        if w.contains(&0.0) {
            zero_weight_instances += 1;
        }
        if w.iter().filter(|&&x| x == 1.0).count() == 1 {
            one_hot_instances += 1;
        }
        for k in [1, 5, 10] {
            let fast = index.retrieve(&q, &w, k).map_err(|e| e.to_string())?;
            let oracle = index
                .oracle_retrieve(&q, &w, k)
                .map_err(|e| e.to_string())?;
            check(fast == oracle, || {
                format!("mismatch at n={n} dim={dim} T={t} K={k}")
            })?;
            let brute = common::weighted_brute_force(&index, &q, &w, k);
            let got: Vec<(String, f64)> =
                fast.into_iter().map(|s| (s.passage_id, s.score)).collect();
            check(got == brute, || {
                format!("reference scan disagrees at n={n} T={t} K={k}")
            })?;
        }
        instances += 1;
    }
    check(zero_weight_instances > 0 && one_hot_instances > 0, || {
        "weight generator never produced zeros or one-hots".into()
    })?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{instances} instances x K in {{1,5,10}}, {zero_weight_instances} with zero weights, {one_hot_instances} one-hot, {:.2?}",
        elapsed
    ))
}

fn single_topic_degeneracy() -> Outcome {
    let mut r = common::rng(7);
    let emb = common::random_matrix(&mut r, "p", 400, 24);
    let index = ShardedIndex::from_shards(vec![emb.clone()]).map_err(|e| e.to_string())?;
    for i in 0..50 {
        let q = common::random_vector(&mut r, 24);
        let got: Vec<String> = index
            .retrieve(&q, &[1.0], 10)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|s| s.passage_id)
            .collect();
        check(got == common::flat_topk(&emb, &q, 10), || {
            format!("query {i} differs")
        })?;
    }
    Ok("50 queries identical to flat top-10".into())
}

fn weighting_semantics() -> Outcome {
    let mut r = common::rng(99);
    let mut zero_scored = 0;
    for i in 0..200 {
        let t = r.random_range(2..=8);
        let dim = r.random_range(2..=16);
        let index = common::random_index(&mut r, 150, dim, t);
        let q = common::random_vector(&mut r, dim);
        let mut w = common::random_weights(&mut r, t);
        // always leave at least one shard switched off
        w[i % t] = 0.0;
        let base = index.retrieve(&q, &w, 150).map_err(|e| e.to_string())?;
        for s in &base {
            if w[s.topic_id] == 0.0 {
                check(s.score == 0.0, || {
                    format!("instance {i}: zero-weight shard scored {}", s.score)
                })?;
                zero_scored += 1;
            }
        }
        for k in [1, 5, 10] {
            let ids = |w: &[f64]| -> Result<Vec<String>, String> {
                Ok(index
                    .retrieve(&q, w, k)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(|s| s.passage_id)
                    .collect())
            };
            let reference = ids(&w)?;
            for c in [0.5, 2.0, 10.0] {
                let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
                check(ids(&scaled)? == reference, || {
                    format!("instance {i}: ranking moved at c={c} K={k}")
                })?;
            }
        }
    }
    Ok(format!("200 instances, {zero_scored} zero-weight candidates all scored 0, rankings fixed at c in {{0.5,2,10}}"))
}

fn distribution_invariants() -> Outcome {
    let mut r = common::rng(1000);
    let mut worst_sum = 0.0f64;
    let mut worst_scale = 0.0f64;
    for i in 0..1000 {
        let t = r.random_range(1..=10);
        let dim = r.random_range(1..=32);
        let tau = [0.01f32, 0.1, 1.0, 5.0][r.random_range(0..4)];
        let centroids: Vec<f32> = (0..t)
            .flat_map(|_| common::random_vector(&mut r, dim))
            .collect();
        let model = TopicModel::new(dim, centroids, tau).map_err(|e| format!("pair {i}: {e}"))?;
        let v = common::random_vector(&mut r, dim);
        let w = model.infer_distribution(&v).map_err(|e| e.to_string())?;
        let w = w.weights();
        let sum: f64 = w.iter().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        check(
            (sum - 1.0).abs() <= 1e-6 && w.iter().all(|&x| x >= 0.0),
            || format!("pair {i}: not on the simplex (sum {sum})"),
        )?;
        let argmax = (0..w.len()).fold(0, |b, j| if w[j] > w[b] { j } else { b });
        let hard = model.assign_cluster(&v).map_err(|e| e.to_string())?;
        check(hard == argmax, || {
            format!("pair {i}: assign_cluster {hard}, argmax {argmax}")
        })?;
        let c = [1e-3f32, 0.5, 7.0, 1e3][i % 4];
        let scaled: Vec<f32> = v.iter().map(|x| x * c).collect();
        let ws = model
            .infer_distribution(&scaled)
            .map_err(|e| e.to_string())?;
        for (a, b) in w.iter().zip(ws.weights()) {
            worst_scale = worst_scale.max((a - b).abs());
        }
        check(worst_scale <= 1e-6, || {
            format!("pair {i}: scaling by {c} moved a weight by {worst_scale}")
        })?;
        check(
            model.assign_cluster(&scaled).map_err(|e| e.to_string())? == hard,
            || format!("pair {i}: scaling changed the hard assignment"),
        )?;
    }
    Ok(format!(
        "1000 pairs, max |sum-1| {worst_sum:.1e}, max scale drift {worst_scale:.1e}"
    ))
}

fn planted_sweep() -> Outcome {
    let start = Instant::now();
    let config = SweepConfig {
        train: TrainConfig {
            temperature: 0.0015,
            restarts: 5,
            ..TrainConfig::default()
        },
        ..SweepConfig::default()
    };
    let mut good = 0;
    let mut details = Vec::new();
    for seed in 0..10 {
        let data = generate_synthetic(&SyntheticSpec {
            true_t: 4,
            noise_sigma: 0.05,
            passages_per_topic: 50,
            queries_per_topic: 20,
            seed,
            ..SyntheticSpec::default()
        })
        .map_err(|e| e.to_string())?;
        let sweep_data = SweepData {
            corpus: &data.corpus,
            embeddings: &data.embeddings,
            validation: &data.validation,
            test: &data.test,
            word_vectors: None,
        };
        let result =
            sweep_t(&sweep_data, 1, 8, &config, Parallelism::auto()).map_err(|e| e.to_string())?;
        let chosen = result.chosen_t;
        let gain = result.per_t[&chosen].validation_r_at_5 - result.per_t[&1].validation_r_at_5;
        let ok = (3..=5).contains(&chosen) && gain >= 0.02;
        if ok {
            good += 1;
        }
        details.push(format!(
            "seed {seed}: T={chosen} gain {gain:+.3}{}",
            if ok { "" } else { " (miss)" }
        ));
    }
    let elapsed = start.elapsed();
    let summary = format!("{good}/10 seeds in {elapsed:.1?}; {}", details.join(", "));
    check(good >= 9 && elapsed < Duration::from_secs(300), || {
        summary.clone()
    })?;
    Ok(summary)
}

fn metric_fixtures() -> Outcome {
    let f = unigram_f1("a b c", "a b d");
    check((f - 2.0 / 3.0).abs() <= 1e-9, || format!("f1 {f}"))?;

    check(kilt_f1(0.8, 1) == 0.8, || "kilt with page hit".into())?;
    check(kilt_f1(0.8, 0) == 0.0, || "kilt with page miss".into())?;
    check(kilt_f1(0.0, 1) == 0.0, || "kilt with zero f1".into())?;
    let mean = (kilt_f1(0.5, 1) + kilt_f1(0.9, 0)) / 2.0;
    check(mean == 0.25, || format!("kilt aggregate {mean}"))?;

    let mut r = common::rng(64);
    for i in 0..100 {
        let n = r.random_range(0..40);
        let mut ranking: Vec<String> = (0..60).map(|j| format!("p{j}")).collect();
        use rand::seq::SliceRandom;
        ranking.shuffle(&mut r);
        ranking.truncate(n);
        let g = r.random_range(1..6);
        let gold: BTreeSet<String> = (0..g)
            .map(|_| format!("p{}", r.random_range(0..60)))
            .collect();
        let mut prev = 0.0;
        for k in 1..=45 {
            let v = recall_at_k(&ranking, &gold, k).map_err(|e| e.to_string())?;
            check(v >= prev, || format!("ranking {i}: recall fell at k={k}"))?;
            prev = v;
        }
    }

    let up = pearson_length_f1(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).map_err(|e| e.to_string())?;
    let down =
        pearson_length_f1(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]).map_err(|e| e.to_string())?;
    check(up.r == 1.0 && down.r == -1.0, || {
        format!("perfect cases gave {} and {}", up.r, down.r)
    })?;
    let five = pearson_length_f1(&[(1.0, 2.0), (2.0, 4.0), (3.0, 5.0), (4.0, 4.0), (5.0, 5.0)])
        .map_err(|e| e.to_string())?;
    let closed = 6.0 / 60f64.sqrt();
    check((five.r - closed).abs() <= 1e-9, || {
        format!("five-point r {} vs {closed}", five.r)
    })?;
    Ok(format!(
        "f1 {f:.12}, 100 rankings monotone, five-point r {:.12}",
        five.r
    ))
}

fn weighted_fixture() -> Outcome {
    let shard =
        |id: &str, v: [f32; 2]| EmbeddingMatrix::from_rows(2, vec![(id.to_string(), v.to_vec())]);
    let shards = vec![
        shard("general", [1.0, 0.0]),
        shard("sports", [0.9, 0.0]),
        shard("film", [0.6, 0.0]),
        shard("music", [0.5, 0.0]),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let index = ShardedIndex::from_shards(shards).map_err(|e| e.to_string())?;
    let q = [1.0f32, 0.0];
    let w = [0.21, 0.09, 0.55, 0.15];
    let weighted = index.retrieve(&q, &w, 1).map_err(|e| e.to_string())?;
    check(
        weighted[0].topic_id == 2 && weighted[0].passage_id == "film",
        || format!("weighted top-1 was {}", weighted[0].passage_id),
    )?;
    let unweighted = index
        .retrieve(&q, &[1.0; 4], 1)
        .map_err(|e| e.to_string())?;
    check(unweighted[0].passage_id != "film", || {
        "film also wins unweighted".into()
    })?;
    Ok(format!(
        "weighted top-1 film ({:.3}), unweighted top-1 {} ({:.3})",
        weighted[0].score, unweighted[0].passage_id, unweighted[0].raw_dot
    ))
}

fn run_pipeline(cwd: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let steps: &[&[&str]] = &[
        &[
            "synth",
            "--t",
            "3",
            "--passages-per-topic",
            "15",
            "--dim",
            "48",
            "--queries-per-topic",
            "5",
            "--seed",
            "17",
            "--out",
            "data",
        ],
        &[
            "ingest-check",
            "--corpus",
            "data/corpus.jsonl",
            "--emb",
            "data/passages.emb",
            "--queries",
            "data/validation.jsonl",
            "--query-emb",
            "data/validation.emb",
            "--out",
            "ingest",
        ],
        &["ingest-check", "--corpus", "data/corpus.jsonl"],
        &[
            "train-topics",
            "--emb",
            "data/passages.emb",
            "--t",
            "3",
            "--seed",
            "5",
            "--temperature",
            "0.05",
            "--out",
            "model",
        ],
        &[
            "assign",
            "--model",
            "model/topics.tpm",
            "--emb",
            "data/passages.emb",
            "--corpus",
            "data/corpus.jsonl",
            "--query-emb",
            "data/test.emb",
            "--out",
            "assign",
        ],
        &[
            "build-index",
            "--corpus",
            "data/corpus.jsonl",
            "--emb",
            "data/passages.emb",
            "--model",
            "model/topics.tpm",
            "--out",
            "index",
        ],
        &[
            "retrieve",
            "--index",
            "index",
            "--model",
            "model/topics.tpm",
            "--query-emb",
            "data/test.emb",
            "--k",
            "10",
            "--out",
            "retrieve",
        ],
        &[
            "evaluate",
            "--index",
            "index",
            "--model",
            "model/topics.tpm",
            "--corpus",
            "data/corpus.jsonl",
            "--queries",
            "data/test.jsonl",
            "--query-emb",
            "data/test.emb",
            "--metrics",
            "r@5,p@1,f1,kilt-f1",
            "--out",
            "evaluate",
        ],
        &[
            "sweep-t",
            "--corpus",
            "data/corpus.jsonl",
            "--emb",
            "data/passages.emb",
            "--queries",
            "data/validation.jsonl",
            "--query-emb",
            "data/validation.emb",
            "--test-queries",
            "data/test.jsonl",
            "--test-query-emb",
            "data/test.emb",
            "--word-vectors",
            "data/word_vectors.emb",
            "--t-max",
            "4",
            "--runs",
            "2",
            "--out",
            "sweep",
        ],
    ];
    let mut outputs = Vec::new();
    for (i, args) in steps.iter().enumerate() {
        let out = Command::new(env!("CARGO_BIN_EXE_topicshard"))
            .current_dir(cwd)
            .args(*args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!(
                "{} failed: {}",
                args[0],
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        outputs.push((format!("step {i} {} stdout", args[0]), out.stdout));
    }
    let mut files = Vec::new();
    collect_files(cwd, cwd, &mut files).map_err(|e| e.to_string())?;
    files.sort();
    for rel in files {
        let bytes = std::fs::read(cwd.join(&rel)).map_err(|e| e.to_string())?;
        outputs.push((rel, bytes));
    }
    Ok(outputs)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(
                path.strip_prefix(root)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned(),
            );
        }
    }
    Ok(())
}

fn cli_determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_pipeline(a.path())?;
    let second = run_pipeline(b.path())?;
    check(first.len() == second.len(), || "different file sets".into())?;
    for ((name_a, bytes_a), (name_b, bytes_b)) in first.iter().zip(&second) {
        check(name_a == name_b, || format!("{name_a} vs {name_b}"))?;
        check(bytes_a == bytes_b, || {
            format!("{name_a} differs between runs")
        })?;
    }
    Ok(format!(
        "8 subcommands, {} outputs byte-identical",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("single-topic degeneracy", single_topic_degeneracy),
        ("weighted scoring semantics", weighting_semantics),
        ("topic distribution invariants", distribution_invariants),
        ("planted-structure sweep", planted_sweep),
        ("metric fixtures", metric_fixtures),
        ("weighted top-1 fixture", weighted_fixture),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
