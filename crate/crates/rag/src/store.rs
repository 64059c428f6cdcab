//! Vector index over the code of reference properties.
//!
//! Linear scan; vectors are unit-normalized on insertion so the dot product
//! is the cosine similarity.

use crate::embed::{dot, normalize, Embedder};
use crate::knowledge::KnowledgeEntry;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

pub const FORMAT: &str = "ppgpt-knowledge-store";
pub const VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Record {
    entry: KnowledgeEntry,
    vector: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u64,
    dimension: usize,
    count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryResult {
    pub entry: KnowledgeEntry,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnowledgeStore {
    dim: usize,
    records: BTreeMap<String, Record>,
}

impl KnowledgeStore {
    pub fn new(dim: usize) -> Self {
        KnowledgeStore {
            dim,
            records: BTreeMap::new(),
        }
    }

    /// Build a store by embedding the code of every entry.
    pub fn ingest(entries: &[KnowledgeEntry], embedder: &dyn Embedder) -> Result<Self> {
        let mut s = KnowledgeStore::new(embedder.dimension());
        s.add(entries, embedder)?;
        Ok(s)
    }

    /// Add entries; re-adding an identical entry is a no-op.
    pub fn add(&mut self, entries: &[KnowledgeEntry], embedder: &dyn Embedder) -> Result<()> {
        for e in entries {
            e.validate()?;
            if self.check_existing(e)? {
                continue;
            }
            let v = embedder.embed(&e.code)?;
            self.insert_vector(e.clone(), v)?;
        }
        Ok(())
    }

    fn check_existing(&self, e: &KnowledgeEntry) -> Result<bool> {
        match self.records.get(&e.id) {
            Some(r) if r.entry == *e => Ok(true),
            Some(_) => Err(Error::DuplicateId(e.id.clone())),
            None => Ok(false),
        }
    }

    /// Insert an entry with a precomputed raw vector.
    pub fn insert_vector(&mut self, entry: KnowledgeEntry, vector: Vec<f64>) -> Result<()> {
        entry.validate()?;
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if self.check_existing(&entry)? {
            return Ok(());
        }
        let vector = normalize(vector)?;
        self.records.insert(entry.id.clone(), Record { entry, vector });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn get(&self, id: &str) -> Option<&KnowledgeEntry> {
        self.records.get(id).map(|r| &r.entry)
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.records.get(id).map(|r| r.vector.as_slice())
    }

    pub fn entries(&self) -> impl Iterator<Item = &KnowledgeEntry> {
        self.records.values().map(|r| &r.entry)
    }

    /// Entries whose code is at least `threshold`-similar to `query_code`,
    /// most similar first, ties by id.
    pub fn retrieve(
        &self,
        query_code: &str,
        embedder: &dyn Embedder,
        threshold: f64,
        max: Option<usize>,
    ) -> Result<Vec<QueryResult>> {
        if self.is_empty() {
            return Err(Error::Precondition("no reference properties".into()));
        }
        let q = embedder.embed(query_code)?;
        self.retrieve_vector(q, threshold, max)
    }

    pub fn retrieve_vector(&self, query: Vec<f64>, threshold: f64, max: Option<usize>) -> Result<Vec<QueryResult>> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        let q = normalize(query)?;
        let mut out: Vec<QueryResult> = self
            .records
            .values()
            .map(|r| QueryResult {
                entry: r.entry.clone(),
                similarity: dot(&q, &r.vector),
            })
            .filter(|r| r.similarity >= threshold)
            .collect();
        // BTreeMap iteration is already in id order, so a stable sort keeps ties by id.
        out.sort_by(|a, b| b.similarity.total_cmp(&a.similarity));
        if let Some(m) = max {
            out.truncate(m);
        }
        Ok(out)
    }

    pub fn write_to(&self, w: &mut dyn Write) -> Result<()> {
        let h = Header {
            format: FORMAT.into(),
            version: VERSION,
            dimension: self.dim,
            count: self.records.len(),
        };
        serde_json::to_writer(&mut *w, &h)?;
        w.write_all(b"\n")?;
        for r in self.records.values() {
            serde_json::to_writer(&mut *w, r)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn persist(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let corrupt = |m: String| Error::Corrupt(m);
        let mut lines = text.split_terminator('\n');
        let head = lines.next().ok_or_else(|| corrupt("empty file".into()))?;
        let h: Header = serde_json::from_str(head).map_err(|e| corrupt(format!("header: {e}")))?;
        if h.format != FORMAT {
            return Err(corrupt(format!("unknown format `{}`", h.format)));
        }
        if h.version != VERSION {
            return Err(Error::Version(h.version));
        }
        if !text.ends_with('\n') {
            return Err(corrupt("truncated record".into()));
        }
        let mut s = KnowledgeStore::new(h.dimension);
        for (i, line) in lines.enumerate() {
            let r: Record = serde_json::from_str(line).map_err(|e| corrupt(format!("record {}: {e}", i + 1)))?;
            if r.vector.len() != h.dimension {
                return Err(corrupt(format!("record {} has dimension {}", i + 1, r.vector.len())));
            }
            if s.records.insert(r.entry.id.clone(), r).is_some() {
                return Err(corrupt(format!("record {} repeats an id", i + 1)));
            }
        }
        if s.records.len() != h.count {
            return Err(corrupt(format!(
                "expected {} records, found {}",
                h.count,
                s.records.len()
            )));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}
