//! Knowledge-base domain types and their on-disk formats.

mod corpus;
mod embedding;
mod query;

use serde::Serialize;

pub use corpus::{load_corpus, Corpus, Passage};
pub use embedding::{load_embeddings, write_embeddings, EmbeddingMatrix, EMB_MAGIC};
pub use query::{load_queries, write_queries, QueryRecord, QuerySet, Turn};

/// Outcome of checking that an embedding file covers a corpus one-to-one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlignmentReport {
    /// Corpus passages with no embedding row, in corpus order.
    pub missing_embeddings: Vec<String>,
    /// Embedding rows with no corpus passage, in file order.
    pub extraneous: Vec<String>,
    pub order_matches: bool,
    pub aligned: bool,
}

pub fn validate_alignment(corpus: &Corpus, emb: &EmbeddingMatrix) -> AlignmentReport {
    let missing_embeddings: Vec<String> = corpus
        .passages()
        .iter()
        .filter(|p| emb.position(&p.id).is_none())
        .map(|p| p.id.clone())
        .collect();
    let extraneous: Vec<String> = emb
        .ids()
        .iter()
        .filter(|id| !corpus.contains(id))
        .cloned()
        .collect();
    let order_matches = corpus.len() == emb.len()
        && corpus
            .passages()
            .iter()
            .zip(emb.ids())
            .all(|(p, id)| &p.id == id);
    let aligned = missing_embeddings.is_empty() && extraneous.is_empty() && order_matches;
    AlignmentReport {
        missing_embeddings,
        extraneous,
        order_matches,
        aligned,
    }
}

/// Checks every matrix shares one dimension.
pub fn common_dim<'a>(
    mats: impl IntoIterator<Item = &'a EmbeddingMatrix>,
) -> crate::Result<Option<usize>> {
    let mut dim = None;
    for m in mats {
        match dim {
            None => dim = Some(m.dim()),
            Some(d) if d != m.dim() => {
                return Err(crate::Error::DimMismatch {
                    expected: d,
                    actual: m.dim(),
                })
            }
            _ => {}
        }
    }
    Ok(dim)
}
