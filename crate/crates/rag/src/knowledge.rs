//! Reference properties and the `knowledge.jsonl` format.

use crate::{Error, PropertyKind, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub id: String,
    /// Code the property targets; the only embedded field.
    pub code: String,
    #[serde(default)]
    pub code_summary: String,
    pub property: String,
    #[serde(default)]
    pub property_summary: String,
    pub kind: PropertyKind,
    #[serde(default)]
    pub source: String,
}

impl KnowledgeEntry {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidEntry {
                id: self.id.clone(),
                reason: reason.into(),
            })
        };
        if self.id.trim().is_empty() {
            return bad("empty id");
        }
        if self.code.trim().is_empty() {
            return bad("empty code");
        }
        Ok(())
    }
}

pub fn parse_jsonl(text: &str) -> Result<Vec<KnowledgeEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: KnowledgeEntry = serde_json::from_str(line).map_err(|e| Error::InvalidEntry {
            id: format!("line {}", i + 1),
            reason: e.to_string(),
        })?;
        e.validate()?;
        out.push(e);
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<KnowledgeEntry>> {
    let f = std::fs::File::open(path)?;
    let mut text = String::new();
    for line in std::io::BufReader::new(f).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_jsonl(&text)
}

pub fn write_jsonl(path: &Path, entries: &[KnowledgeEntry]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in entries {
        serde_json::to_writer(&mut f, e)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}
