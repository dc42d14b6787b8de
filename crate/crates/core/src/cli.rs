//! Command-line front end. Every stage reads and writes plain files, so any
//! stage can be swapped for externally produced artifacts.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::{
    generate_synthetic, score_rankings, sweep_t, RunSummary, SweepConfig, SweepData, SyntheticSpec,
};
use crate::index::{
    build_index, load_index, save_index, shard_file_name, split_by_assignment, write_retrievals,
    ScoredPassage, ShardedIndex,
};
use crate::kb::{
    load_corpus, load_embeddings, load_queries, validate_alignment, write_embeddings,
    write_queries, Corpus, EmbeddingMatrix, QuerySet,
};
use crate::metrics::parse_metrics;
use crate::par::Parallelism;
use crate::topics::{
    top_words, train_topics, write_distributions, DistributionProvider, ExternalDistributions,
    TopicAssignment, TopicModel, TrainConfig, TPM_MAGIC,
};

#[derive(Debug, Parser)]
#[command(
    name = "topicshard",
    version,
    about = "Topic-sharded dense passage retrieval"
)]
struct Cli {
    /// Plain-text key=value file supplying defaults for any flag; flags on
    /// the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate corpus, embedding and query files and report their shape.
    IngestCheck(IngestArgs),
    /// Cluster passage embeddings into T topics and save the model.
    TrainTopics(TrainArgs),
    /// Hard-assign passages to topics; optionally emit keywords and query
    /// distributions.
    Assign(AssignArgs),
    /// Build a sharded index directory.
    BuildIndex(BuildArgs),
    /// Rank passages for each query vector.
    Retrieve(RetrieveArgs),
    /// Retrieve and score a labelled query set.
    Evaluate(EvaluateArgs),
    /// Train, index and evaluate every T in a range, picking T on
    /// validation recall.
    SweepT(SweepArgs),
    /// Write a planted-topic synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    emb: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    query_emb: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainOpts {
    #[arg(long, default_value_t = 1.0)]
    temperature: f32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

impl TrainOpts {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            seed: self.seed,
            temperature: self.temperature,
            restarts: self.restarts,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    emb: PathBuf,
    #[arg(long)]
    t: usize,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AssignArgs {
    /// Topic model (TPM1).
    #[arg(long)]
    model: PathBuf,
    /// Passage embeddings to assign.
    #[arg(long)]
    emb: PathBuf,
    /// With a corpus, every passage must be assigned and keywords are written.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    top_words: usize,
    /// Query embeddings whose topic distributions should be written.
    #[arg(long)]
    query_emb: Option<PathBuf>,
    /// Override the model's softmax temperature.
    #[arg(long)]
    temperature: Option<f32>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Either a directory of shard_<t>.emb files, one per topic encoder, or
    /// one matrix to split by --model or --assignment.
    #[arg(long)]
    emb: PathBuf,
    #[arg(long, conflicts_with = "assignment")]
    model: Option<PathBuf>,
    /// Assignment JSON Lines ({"id", "topic"}); needs --t.
    #[arg(long, requires = "t")]
    assignment: Option<PathBuf>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct QueryOpts {
    /// Topic source: a TPM1 model or a distribution JSON Lines file.
    #[arg(long)]
    model: PathBuf,
    /// Override the model's softmax temperature (TPM1 only).
    #[arg(long)]
    temperature: Option<f32>,
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[command(flatten)]
    query: QueryOpts,
    /// Restrict and order output by this query file.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Check that the index was built from this corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    query: QueryOpts,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated: r@<k>, p@1, f1, kilt-f1.
    #[arg(long, default_value = "r@5,p@1")]
    metrics: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    emb: PathBuf,
    /// Validation queries.
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    query_emb: PathBuf,
    #[arg(long)]
    test_queries: PathBuf,
    #[arg(long)]
    test_query_emb: PathBuf,
    /// Word vectors (EMB1 keyed by word) for topic coherence.
    #[arg(long)]
    word_vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    t_min: usize,
    #[arg(long)]
    t_max: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Repeat with seeds seed, seed+1, ... and report mean and stdev.
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[command(flatten)]
    train: TrainOpts,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Number of planted topics.
    #[arg(long, default_value_t = 4)]
    t: usize,
    #[arg(long, default_value_t = 50)]
    passages_per_topic: usize,
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    #[arg(long, default_value_t = 0.05)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    query_noise_sigma: f64,
    #[arg(long, default_value_t = 20)]
    queries_per_topic: usize,
    #[arg(long, default_value_t = 30)]
    vocab_per_topic: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line and returns the process exit status. Failures are
/// reported on standard error as one `error: <code>: <message>` line.
pub fn main() -> i32 {
    run(std::env::args_os().collect())
}

pub fn run(args: Vec<OsString>) -> i32 {
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => return report(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            // keep clap's message, drop its usage and help footer
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let message = message.join(" ");
            return report(&Error::Usage(
                message.trim_start_matches("error: ").to_owned(),
            ));
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    let message = e.to_string().replace('\n', " ");
    eprintln!("error: {}: {message}", e.code());
    match e {
        Error::Usage(_) => 2,
        _ => 1,
    }
}

fn config_value_arg(args: &[OsString]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Appends `--key value` for every config entry that the chosen subcommand
/// accepts and that the command line does not already set.
fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_value_arg(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let command = Cli::command();
    let sub_name = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .find(|a| command.find_subcommand(a).is_some());
    let Some(sub_name) = sub_name else {
        return Ok(args);
    };
    let sub = command.find_subcommand(&sub_name).expect("found above");
    let accepted: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_owned))
        .collect();
    let known_anywhere = |key: &str| {
        command
            .get_subcommands()
            .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key)))
    };
    let present = |key: &str| {
        args.iter().any(|a| {
            let s = a.to_string_lossy();
            s == format!("--{key}") || s.starts_with(&format!("--{key}="))
        })
    };
    let mut extra = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.clone(),
            line: idx + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err("expected key=value".into()))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key == "config" {
            return Err(parse_err(
                "config files cannot include other config files".into(),
            ));
        }
        if !known_anywhere(&key) {
            return Err(parse_err(format!("unknown key \"{key}\"")));
        }
        if accepted.contains(&key) && !present(&key) {
            extra.push(OsString::from(format!("--{key}")));
            extra.push(OsString::from(value));
        }
    }
    args.extend(extra);
    Ok(args)
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::IngestCheck(a) => ingest_check(a),
        Command::TrainTopics(a) => train(a),
        Command::Assign(a) => assign(a),
        Command::BuildIndex(a) => build(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SweepT(a) => sweep(a),
        Command::Synth(a) => synth(a),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn load_query_set(queries: &Path, vectors: &Path) -> Result<QuerySet> {
    QuerySet::new(load_queries(queries)?, load_embeddings(vectors)?)
}

fn load_model(path: &Path, temperature: Option<f32>) -> Result<TopicModel> {
    let model = TopicModel::load(path)?;
    match temperature {
        Some(t) => model.with_temperature(t),
        None => Ok(model),
    }
}

/// A TPM1 model, or precomputed distributions for anything else.
fn load_provider(path: &Path, temperature: Option<f32>) -> Result<Box<dyn DistributionProvider>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(TPM_MAGIC) {
        return Ok(Box::new(load_model(path, temperature)?));
    }
    if temperature.is_some() {
        return Err(Error::Usage(
            "--temperature only applies to a TPM1 topic model".into(),
        ));
    }
    Ok(Box::new(ExternalDistributions::load(path)?))
}

#[derive(Serialize)]
struct CorpusSummary {
    passages: usize,
    pages: usize,
    corpus_hash: String,
}

#[derive(Serialize)]
struct MatrixSummary {
    count: usize,
    dim: usize,
}

#[derive(Serialize)]
struct IngestReport {
    corpus: CorpusSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    embeddings: Option<MatrixSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alignment: Option<crate::kb::AlignmentReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    queries: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    query_embeddings: Option<MatrixSummary>,
}

fn ingest_check(a: IngestArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let summary = |m: &EmbeddingMatrix| MatrixSummary {
        count: m.len(),
        dim: m.dim(),
    };
    let mut report = IngestReport {
        corpus: CorpusSummary {
            passages: corpus.len(),
            pages: corpus.pages().len(),
            corpus_hash: corpus.content_hash(),
        },
        embeddings: None,
        alignment: None,
        queries: None,
        query_embeddings: None,
    };
    let mut passage_dim = None;
    if let Some(p) = &a.emb {
        let emb = load_embeddings(p)?;
        passage_dim = Some(emb.dim());
        report.embeddings = Some(summary(&emb));
        report.alignment = Some(validate_alignment(&corpus, &emb));
    }
    if let Some(p) = &a.queries {
        let records = load_queries(p)?;
        report.queries = Some(records.len());
        if let Some(v) = &a.query_emb {
            let set = QuerySet::new(records, load_embeddings(v)?)?;
            report.query_embeddings = Some(summary(&set.vectors));
        }
    } else if let Some(v) = &a.query_emb {
        report.query_embeddings = Some(summary(&load_embeddings(v)?));
    }
    if let (Some(d), Some(q)) = (passage_dim, &report.query_embeddings) {
        if d != q.dim {
            return Err(Error::DimMismatch {
                expected: d,
                actual: q.dim,
            });
        }
    }
    match &a.out {
        Some(dir) => {
            out_dir(dir)?;
            write_json(&dir.join("ingest_report.json"), &report)
        }
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TrainReport {
    #[serde(rename = "T")]
    num_topics: usize,
    dim: usize,
    temperature: f32,
    trained_on: usize,
    config: TrainConfig,
    cluster_sizes: Vec<usize>,
}

fn train(a: TrainArgs) -> Result<()> {
    let emb = load_embeddings(&a.emb)?;
    let config = a.train.config();
    let model = train_topics(&emb, a.t, &config, Parallelism::auto())?;
    let assignment = model.assign_all(&emb, Parallelism::auto())?;
    out_dir(&a.out)?;
    model.save(&a.out.join("topics.tpm"))?;
    let report = TrainReport {
        num_topics: model.num_topics(),
        dim: model.dim(),
        temperature: model.temperature(),
        trained_on: model.trained_on(),
        config,
        cluster_sizes: assignment.histogram(),
    };
    write_json(&a.out.join("train_report.json"), &report)?;
    println!(
        "trained {} topics on {} vectors; cluster sizes {:?}",
        report.num_topics, report.trained_on, report.cluster_sizes
    );
    Ok(())
}

#[derive(Serialize)]
struct AssignReport {
    #[serde(rename = "T")]
    num_topics: usize,
    histogram: Vec<usize>,
    empty_topics: Vec<usize>,
}

fn assign(a: AssignArgs) -> Result<()> {
    let model = load_model(&a.model, a.temperature)?;
    let emb = load_embeddings(&a.emb)?;
    let assignment = model.assign_all(&emb, Parallelism::auto())?;
    let keywords = match &a.corpus {
        Some(p) => {
            let corpus = load_corpus(p)?;
            Some(top_words(
                model.num_topics(),
                &corpus,
                &assignment,
                a.top_words,
            )?)
        }
        None => None,
    };
    let distributions = match &a.query_emb {
        Some(p) => {
            let q = load_embeddings(p)?;
            let ws = Parallelism::auto().map_range(q.len(), |i| model.infer_distribution(q.row(i)));
            Some((q, ws.into_iter().collect::<Result<Vec<_>>>()?))
        }
        None => None,
    };

    out_dir(&a.out)?;
    assignment.write_jsonl(&a.out.join("assignment.jsonl"))?;
    let histogram = assignment.histogram();
    let report = AssignReport {
        num_topics: model.num_topics(),
        empty_topics: (0..histogram.len())
            .filter(|&t| histogram[t] == 0)
            .collect(),
        histogram,
    };
    write_json(&a.out.join("assign_report.json"), &report)?;
    if let Some(words) = keywords {
        let by_topic: BTreeMap<usize, Vec<String>> = words.into_iter().enumerate().collect();
        write_json(&a.out.join("keywords.json"), &by_topic)?;
    }
    if let Some((q, ws)) = distributions {
        write_distributions(
            &a.out.join("query_distributions.jsonl"),
            q.ids().iter().map(String::as_str).zip(&ws),
        )?;
    }
    println!(
        "assigned {} passages; histogram {:?}",
        assignment.len(),
        report.histogram
    );
    Ok(())
}

fn shard_files_in(dir: &Path, t: Option<usize>) -> Result<BTreeMap<usize, EmbeddingMatrix>> {
    let mut shards = BTreeMap::new();
    for topic in 0.. {
        if t.is_some_and(|t| topic >= t) {
            break;
        }
        let path = dir.join(shard_file_name(topic));
        if t.is_none() && !path.exists() {
            break;
        }
        shards.insert(topic, load_embeddings(&path)?);
    }
    if shards.is_empty() {
        return Err(Error::invalid(format!(
            "{} holds no {} file",
            dir.display(),
            shard_file_name(0)
        )));
    }
    Ok(shards)
}

fn build(a: BuildArgs) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let per_shard = if a.emb.is_dir() {
        if a.model.is_some() || a.assignment.is_some() {
            return Err(Error::Usage(
                "--model and --assignment apply only when --emb is a single file".into(),
            ));
        }
        shard_files_in(&a.emb, a.t)?
    } else {
        let emb = load_embeddings(&a.emb)?;
        let assignment = match (&a.model, &a.assignment, a.t) {
            (Some(m), None, _) => {
                let model = TopicModel::load(m)?;
                if a.t.is_some_and(|t| t != model.num_topics()) {
                    return Err(Error::Usage(format!(
                        "--t disagrees with the model's {} topics",
                        model.num_topics()
                    )));
                }
                model.assign_all(&emb, Parallelism::auto())?
            }
            (None, Some(p), Some(t)) => TopicAssignment::load_jsonl(p, t)?,
            _ => {
                return Err(Error::Usage(
                    "a single --emb file needs --model or --assignment with --t".into(),
                ))
            }
        };
        split_by_assignment(&emb, &assignment)?
    };
    let (index, report) = build_index(&corpus, per_shard)?;
    save_index(&a.out, &index, &corpus.content_hash())?;
    write_json(&a.out.join("build_report.json"), &report)?;
    println!(
        "built {} shards over {} passages; sizes {:?}",
        report.num_topics, report.total_passages, report.shard_sizes
    );
    if !report.empty_shards.is_empty() {
        println!("empty shards: {:?}", report.empty_shards);
    }
    Ok(())
}

fn open_index(path: &Path, corpus: Option<&Corpus>) -> Result<ShardedIndex> {
    let (index, manifest) = load_index(path)?;
    if let Some(c) = corpus {
        let hash = c.content_hash();
        if hash != manifest.corpus_hash {
            return Err(Error::invalid(format!(
                "index {} was built from a different corpus",
                path.display()
            )));
        }
    }
    Ok(index)
}

fn rank_ids(
    index: &ShardedIndex,
    provider: &dyn DistributionProvider,
    vectors: &EmbeddingMatrix,
    ids: &[String],
    k: usize,
) -> Result<Vec<Vec<ScoredPassage>>> {
    if provider.num_topics() != index.num_topics() {
        return Err(Error::invalid(format!(
            "topic source has {} topics but the index has {} shards",
            provider.num_topics(),
            index.num_topics()
        )));
    }
    Parallelism::auto()
        .map(ids, |id| {
            let v = vectors
                .get(id)
                .ok_or_else(|| Error::MissingField(format!("query \"{id}\" has no vector")))?;
            let w = provider.distribution(id, v)?;
            index.retrieve_with(v, w.weights(), k, Parallelism::Sequential)
        })
        .into_iter()
        .collect()
}

fn retrieve(a: RetrieveArgs) -> Result<()> {
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;
    let index = open_index(&a.query.index, corpus.as_ref())?;
    let provider = load_provider(&a.query.model, a.query.temperature)?;
    let vectors = load_embeddings(&a.query.query_emb)?;
    let ids: Vec<String> = match &a.queries {
        Some(p) => load_queries(p)?.into_iter().map(|q| q.id).collect(),
        None => vectors.ids().to_vec(),
    };
    let ranked = rank_ids(&index, provider.as_ref(), &vectors, &ids, a.query.k)?;
    out_dir(&a.out)?;
    write_retrievals(
        &a.out.join("retrievals.jsonl"),
        ids.iter()
            .map(String::as_str)
            .zip(ranked.iter().map(Vec::as_slice)),
    )?;
    println!("retrieved top {} for {} queries", a.query.k, ids.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let metrics = parse_metrics(&a.metrics)?;
    let corpus = load_corpus(&a.corpus)?;
    let index = open_index(&a.query.index, Some(&corpus))?;
    let provider = load_provider(&a.query.model, a.query.temperature)?;
    let queries = load_query_set(&a.queries, &a.query.query_emb)?;
    // fail on missing gold fields before spending time on retrieval
    score_rankings(
        &corpus,
        &queries,
        &vec![Vec::new(); queries.len()],
        a.query.k,
        &metrics,
    )?;
    let ids: Vec<String> = queries.records.iter().map(|q| q.id.clone()).collect();
    let ranked = rank_ids(&index, provider.as_ref(), &queries.vectors, &ids, a.query.k)?;
    let report = score_rankings(&corpus, &queries, &ranked, a.query.k, &metrics)?;

    out_dir(&a.out)?;
    write_retrievals(
        &a.out.join("retrievals.jsonl"),
        ids.iter()
            .map(String::as_str)
            .zip(ranked.iter().map(Vec::as_slice)),
    )?;
    write_json(&a.out.join("eval_report.json"), &report)?;
    let table = report.render_table();
    write_text(&a.out.join("eval_table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn load_word_vectors(path: &Path) -> Result<HashMap<String, Vec<f32>>> {
    let m = load_embeddings(path)?;
    Ok(m.rows().map(|(w, v)| (w.to_owned(), v.to_vec())).collect())
}

fn sweep(a: SweepArgs) -> Result<()> {
    if a.runs < 1 {
        return Err(Error::Usage("--runs must be at least 1".into()));
    }
    let corpus = load_corpus(&a.corpus)?;
    let emb = load_embeddings(&a.emb)?;
    let validation = load_query_set(&a.queries, &a.query_emb)?;
    let test = load_query_set(&a.test_queries, &a.test_query_emb)?;
    let word_vectors = a
        .word_vectors
        .as_deref()
        .map(load_word_vectors)
        .transpose()?;
    let data = SweepData {
        corpus: &corpus,
        embeddings: &emb,
        validation: &validation,
        test: &test,
        word_vectors: word_vectors.as_ref(),
    };
    let mut runs = Vec::with_capacity(a.runs);
    for r in 0..a.runs as u64 {
        let mut config = SweepConfig {
            train: a.train.config(),
            k: a.k,
            ..SweepConfig::default()
        };
        config.train.seed = a.train.seed.wrapping_add(r);
        runs.push(sweep_t(
            &data,
            a.t_min,
            a.t_max,
            &config,
            Parallelism::auto(),
        )?);
    }
    out_dir(&a.out)?;
    let table = if a.runs == 1 {
        let result = runs.pop().expect("one run");
        write_json(&a.out.join("sweep.json"), &result)?;
        result.render_table()
    } else {
        let summary = RunSummary::new(runs)?;
        write_json(&a.out.join("sweep.json"), &summary)?;
        summary.render_table()
    };
    write_text(&a.out.join("sweep_table.txt"), &table)?;
    print!("{table}");
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        true_t: a.t,
        passages_per_topic: a.passages_per_topic,
        dim: a.dim,
        noise_sigma: a.noise_sigma,
        query_noise_sigma: a.query_noise_sigma,
        queries_per_topic: a.queries_per_topic,
        vocab_per_topic: a.vocab_per_topic,
        seed: a.seed,
    };
    let data = generate_synthetic(&spec)?;
    let out = &a.out;
    out_dir(out)?;
    data.corpus.write_jsonl(&out.join("corpus.jsonl"))?;
    write_embeddings(&out.join("passages.emb"), &data.embeddings)?;
    write_queries(&out.join("validation.jsonl"), &data.validation.records)?;
    write_embeddings(&out.join("validation.emb"), &data.validation.vectors)?;
    write_queries(&out.join("test.jsonl"), &data.test.records)?;
    write_embeddings(&out.join("test.emb"), &data.test.vectors)?;
    let words: BTreeMap<&String, &Vec<f32>> = data.word_vectors.iter().collect();
    let words = EmbeddingMatrix::from_rows(
        spec.dim,
        words
            .into_iter()
            .map(|(w, v)| (w.clone(), v.clone()))
            .collect(),
    )?;
    write_embeddings(&out.join("word_vectors.emb"), &words)?;
    data.planted
        .write_jsonl(&out.join("planted_assignment.jsonl"))?;
    write_json(&out.join("spec.json"), &spec)?;
    println!(
        "wrote {} passages, {} validation and {} test queries to {}",
        data.corpus.len(),
        data.validation.len(),
        data.test.len(),
        out.display()
    );
    Ok(())
}
