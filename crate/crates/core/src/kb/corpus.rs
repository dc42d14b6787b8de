use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A retrievable knowledge span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub page_id: String,
    pub text: String,
}

/// Ordered passages plus the page grouping derived from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
    pages: BTreeMap<String, Vec<String>>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self> {
        if passages.is_empty() {
            return Err(Error::invalid("corpus is empty"));
        }
        let mut by_id = HashMap::with_capacity(passages.len());
        let mut pages: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, p) in passages.iter().enumerate() {
            validate_passage(p)?;
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: p.id.clone(),
                    context: Some(format!("passage {}", i + 1)),
                });
            }
            pages
                .entry(p.page_id.clone())
                .or_default()
                .push(p.id.clone());
        }
        Ok(Corpus {
            passages,
            by_id,
            pages,
        })
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn page_of(&self, id: &str) -> Option<&str> {
        self.get(id).map(|p| p.page_id.as_str())
    }

    /// page_id -> passage ids in ingestion order.
    pub fn pages(&self) -> &BTreeMap<String, Vec<String>> {
        &self.pages
    }

    /// Content hash over (id, page_id, text) of every passage in order.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for p in &self.passages {
            for field in [&p.id, &p.page_id, &p.text] {
                hasher.update((field.len() as u64).to_le_bytes());
                hasher.update(field.as_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for p in &self.passages {
            out.push_str(&serde_json::to_string(p)?);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn validate_passage(p: &Passage) -> Result<()> {
    if p.id.is_empty() {
        return Err(Error::invalid("passage id is empty"));
    }
    if p.page_id.is_empty() {
        return Err(Error::invalid(format!(
            "passage \"{}\" has empty page_id",
            p.id
        )));
    }
    Ok(())
}

/// Reads a JSON Lines corpus. Blank lines are skipped; line numbers in errors
/// are 1-based physical lines.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, path)
}

pub(crate) fn parse_corpus(text: &str, path: &Path) -> Result<Corpus> {
    let mut passages = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let p: Passage = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        validate_passage(&p).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(first) = seen.insert(p.id.clone(), line_no) {
            return Err(Error::DuplicateId {
                id: p.id,
                context: Some(format!(
                    "{}: line {line_no}, first seen on line {first}",
                    path.display()
                )),
            });
        }
        passages.push(p);
    }
    if passages.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "corpus file contains no passages".into(),
        });
    }
    Corpus::new(passages)
}
