//! Harnesses that recompute summary statistics from recorded runs.

use crate::generation::{CandidateProperty, Status};
use crate::Result;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompileStats {
    pub total: usize,
    pub compilable: usize,
    pub success_rate: f64,
    /// Compilable candidates by number of revisions.
    pub by_attempts: BTreeMap<usize, usize>,
    /// Fraction of all candidates compilable within at most `k` revisions,
    /// indexed by `k`.
    pub within: Vec<f64>,
}

/// Success statistics of a set of finished revise loops.
pub fn compile_stats(cands: &[CandidateProperty], max_attempts: usize) -> CompileStats {
    let total = cands.len();
    let mut by_attempts = BTreeMap::new();
    for c in cands.iter().filter(|c| c.status == Status::Compilable) {
        *by_attempts.entry(c.attempts).or_insert(0) += 1;
    }
    let compilable = by_attempts.values().sum();
    let frac = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let within = (0..=max_attempts)
        .map(|k| frac(by_attempts.range(..=k).map(|(_, v)| v).sum()))
        .collect();
    CompileStats {
        total,
        compilable,
        success_rate: frac(compilable),
        by_attempts,
        within,
    }
}

/// Candidates recorded one per line, as written by the generation step.
pub fn read_candidates(path: &std::path::Path) -> Result<Vec<CandidateProperty>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Manual matching of generated properties against ground truth.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchFile {
    pub ground_truth: Vec<String>,
    pub generated: Vec<GeneratedMatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMatch {
    pub id: String,
    /// Ground-truth ids this property was judged equivalent to.
    #[serde(default)]
    pub matches: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RecallPrecision {
    pub recall: f64,
    pub precision: f64,
    pub matched_truth: usize,
    pub truth: usize,
    pub matched_generated: usize,
    pub generated: usize,
}

/// Recall counts ground-truth properties matched by at least one generated
/// property; precision counts generated properties matching at least one
/// ground-truth property. Matches to unknown ids are ignored.
pub fn recall_precision(m: &MatchFile) -> RecallPrecision {
    let truth: BTreeSet<&str> = m.ground_truth.iter().map(String::as_str).collect();
    let mut hit = BTreeSet::new();
    let mut matched_generated = 0;
    for g in &m.generated {
        let ok: Vec<&str> = g
            .matches
            .iter()
            .map(String::as_str)
            .filter(|t| truth.contains(t))
            .collect();
        matched_generated += !ok.is_empty() as usize;
        hit.extend(ok);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    RecallPrecision {
        recall: ratio(hit.len(), truth.len()),
        precision: ratio(matched_generated, m.generated.len()),
        matched_truth: hit.len(),
        truth: truth.len(),
        matched_generated,
        generated: m.generated.len(),
    }
}
