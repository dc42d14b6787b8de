use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: String,
    pub text: String,
}

/// A dialogue history used as a retrieval query, with optional gold labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_page_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_passage_ids: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidate_response: Option<String>,
}

impl QueryRecord {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid("query id is empty"));
        }
        if self.turns.is_empty() {
            return Err(Error::invalid(format!(
                "query \"{}\" has no turns",
                self.id
            )));
        }
        if matches!(&self.gold_passage_ids, Some(g) if g.is_empty()) {
            return Err(Error::invalid(format!(
                "query \"{}\" has an empty gold_passage_ids list",
                self.id
            )));
        }
        Ok(())
    }

    /// Turns joined as `<speaker>: <text>` lines.
    pub fn history_text(&self) -> String {
        self.turns
            .iter()
            .map(|t| format!("{}: {}", t.speaker, t.text))
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Token count of the concatenated utterances (speaker tags excluded).
    pub fn history_length_tokens(&self) -> usize {
        self.turns
            .iter()
            .map(|t| crate::text::token_count(&t.text))
            .sum()
    }
}

pub fn load_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let q: QueryRecord = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        q.validate().map_err(|e| parse_err(e.to_string()))?;
        if let Some(first) = seen.insert(q.id.clone(), line_no) {
            return Err(Error::DuplicateId {
                id: q.id,
                context: Some(format!(
                    "{}: line {line_no}, first seen on line {first}",
                    path.display()
                )),
            });
        }
        out.push(q);
    }
    Ok(out)
}

pub fn write_queries(path: &Path, queries: &[QueryRecord]) -> Result<()> {
    let mut out = String::new();
    for q in queries {
        out.push_str(&serde_json::to_string(q)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Query records paired with their query-encoder vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub records: Vec<QueryRecord>,
    pub vectors: EmbeddingMatrix,
}

impl QuerySet {
    pub fn new(records: Vec<QueryRecord>, vectors: EmbeddingMatrix) -> Result<Self> {
        for q in &records {
            if vectors.position(&q.id).is_none() {
                return Err(Error::MissingField(format!(
                    "query \"{}\" has no vector in the query embedding file",
                    q.id
                )));
            }
        }
        Ok(QuerySet { records, vectors })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn vector(&self, id: &str) -> Option<&[f32]> {
        self.vectors.get(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_fields() {
        let q: QueryRecord = serde_json::from_str(
            r#"{"id":"q1","turns":[{"speaker":"user","text":"Hi there"}],"gold_passage_ids":["p2","p1"]}"#,
        )
        .unwrap();
        q.validate().unwrap();
        assert_eq!(q.gold_page_id, None);
        assert_eq!(q.gold_passage_ids.as_ref().unwrap().len(), 2);
        assert_eq!(q.history_length_tokens(), 2);
        assert_eq!(q.history_text(), "user: Hi there");
    }

    #[test]
    fn invariants() {
        let mut q: QueryRecord = serde_json::from_str(r#"{"id":"q1","turns":[]}"#).unwrap();
        assert!(q.validate().is_err());
        q.turns.push(Turn {
            speaker: "a".into(),
            text: "b".into(),
        });
        q.gold_passage_ids = Some(BTreeSet::new());
        assert!(q.validate().is_err());
    }
}
