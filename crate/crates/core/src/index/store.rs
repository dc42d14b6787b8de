//! Index directories and retrieval output files.
//!
//! An index directory holds `shard_<t>.emb` (EMB1) for every topic `t` and a
//! `manifest.json` describing the shard layout and the corpus it was built
//! from.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScoredPassage, ShardedIndex};
use crate::error::{Error, Result};
use crate::kb::{load_embeddings, write_embeddings};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    #[serde(rename = "T")]
    pub num_topics: usize,
    pub dim: usize,
    pub shard_sizes: Vec<usize>,
    pub corpus_hash: String,
}

pub fn shard_file_name(topic_id: usize) -> String {
    format!("shard_{topic_id}.emb")
}

/// Writes every shard and the manifest into `dir`, creating it if needed.
pub fn save_index(dir: &Path, index: &ShardedIndex, corpus_hash: &str) -> Result<IndexManifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for shard in index.shards() {
        write_embeddings(
            &dir.join(shard_file_name(shard.topic_id())),
            shard.embeddings(),
        )?;
    }
    let manifest = IndexManifest {
        num_topics: index.num_topics(),
        dim: index.dim(),
        shard_sizes: index.shards().iter().map(|s| s.len()).collect(),
        corpus_hash: corpus_hash.to_owned(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Reads an index directory, checking every shard against the manifest.
pub fn load_index(dir: &Path) -> Result<(ShardedIndex, IndexManifest)> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: IndexManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.clone(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if manifest.shard_sizes.len() != manifest.num_topics {
        return Err(Error::Format {
            path,
            message: format!(
                "manifest lists {} shard sizes for T = {}",
                manifest.shard_sizes.len(),
                manifest.num_topics
            ),
        });
    }
    let mut shards = Vec::with_capacity(manifest.num_topics);
    for (t, &size) in manifest.shard_sizes.iter().enumerate() {
        let shard_path = dir.join(shard_file_name(t));
        let emb = load_embeddings(&shard_path)?;
        if emb.dim() != manifest.dim {
            return Err(Error::DimMismatch {
                expected: manifest.dim,
                actual: emb.dim(),
            });
        }
        if emb.len() != size {
            return Err(Error::Format {
                path: shard_path,
                message: format!("shard has {} rows, manifest says {size}", emb.len()),
            });
        }
        shards.push(emb);
    }
    Ok((ShardedIndex::from_shards(shards)?, manifest))
}

/// One line of a retrieval output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalLine {
    pub query_id: String,
    pub ranked: Vec<ScoredPassage>,
}

pub fn write_retrievals<'a>(
    path: &Path,
    results: impl IntoIterator<Item = (&'a str, &'a [ScoredPassage])>,
) -> Result<()> {
    let mut out = String::new();
    for (query_id, ranked) in results {
        out.push_str(&serde_json::to_string(&RetrievalLine {
            query_id: query_id.to_owned(),
            ranked: ranked.to_vec(),
        })?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
