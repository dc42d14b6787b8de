//! Dense vectors keyed by string id, and the `EMB1` file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "EMB1" | u32 dim | u64 count | count × (u32 id_len | id bytes | dim × f32)
//! ```

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";

/// Row-major `count × dim` matrix of finite f32 values with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("embedding dim must be positive"));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::invalid(format!(
                "{} ids but {} values for dim {dim}",
                ids.len(),
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (row, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), row).is_some() {
                return Err(Error::DuplicateId {
                    id: id.clone(),
                    context: Some(format!("embedding row {row}")),
                });
            }
        }
        Ok(EmbeddingMatrix {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn from_rows(dim: usize, rows: Vec<(String, Vec<f32>)>) -> Result<Self> {
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (id, v) in rows {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            ids.push(id);
            data.extend_from_slice(&v);
        }
        Self::new(dim, ids, data)
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            ids.push(self.ids[r].clone());
            data.extend_from_slice(self.row(r));
        }
        let index = ids
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, id)| (id, i))
            .collect();
        EmbeddingMatrix {
            dim: self.dim,
            ids,
            data,
            index,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.data.len() * 4 + self.ids.len() * 12);
        out.extend_from_slice(EMB_MAGIC);
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        for (id, v) in self.rows() {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |message: String| Error::Format {
            path: path.to_path_buf(),
            message,
        };
        let mut cur = Cursor { bytes, pos: 0 };
        match cur.take(4) {
            Some(m) if m == EMB_MAGIC => {}
            _ => return Err(fail("bad magic, expected \"EMB1\"".into())),
        }
        let (dim, count) = match (cur.u32(), cur.u64()) {
            (Some(d), Some(c)) => (d as usize, c),
            _ => return Err(fail("truncated header".into())),
        };
        if dim == 0 {
            return Err(fail("header declares dim 0".into()));
        }
        // No preallocation from `count`: a corrupt header must not drive allocation.
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut index = HashMap::new();
        for row in 0..count {
            let eof = || fail(format!("unexpected end of file after row {row}"));
            let len = cur.u32().ok_or_else(eof)? as usize;
            let id_bytes = cur.take(len).ok_or_else(eof)?;
            let id = std::str::from_utf8(id_bytes)
                .map_err(|_| fail(format!("id at row {row} is not valid UTF-8")))?
                .to_owned();
            let vec_bytes = cur.take(4 * dim).ok_or_else(eof)?;
            for (col, chunk) in vec_bytes.chunks_exact(4).enumerate() {
                let v = f32::from_le_bytes(chunk.try_into().unwrap());
                if !v.is_finite() {
                    return Err(fail(format!("non-finite value at row {row}, column {col}")));
                }
                data.push(v);
            }
            if index.insert(id.clone(), row as usize).is_some() {
                return Err(Error::DuplicateId {
                    id,
                    context: Some(format!("{}: row {row}", path.display())),
                });
            }
            ids.push(id);
        }
        if cur.pos != bytes.len() {
            return Err(fail(format!(
                "{} trailing bytes after row {count}",
                bytes.len() - cur.pos
            )));
        }
        Ok(EmbeddingMatrix {
            dim,
            ids,
            data,
            index,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingMatrix::from_bytes(&bytes, path)
}

pub fn write_embeddings(path: &Path, emb: &EmbeddingMatrix) -> Result<()> {
    std::fs::write(path, emb.to_bytes()).map_err(|e| Error::io(path, e))
}
