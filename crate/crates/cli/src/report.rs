//! Run reports: one JSON record per property plus a text summary.

use ppgpt_core::verifier::{PropertyResult, Trace, Verdict};
use ppgpt_core::SourceFile;
use ppgpt_rag::generation::Status;
use ppgpt_rag::ranking::FeatureVector;
use serde::Serialize;
use std::fmt::Write;

/// Counterexample as a numbered call sequence with concrete arguments.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Counterexample {
    pub property: String,
    pub deployer: String,
    pub constructor_args: Vec<String>,
    pub calls: Vec<String>,
    pub inputs: Vec<(String, String)>,
    /// `file:line:col` of the failing assertion or postcondition.
    pub failing_at: String,
    pub failing_text: String,
}

impl Counterexample {
    pub fn new(property: &str, t: &Trace, spec_src: &SourceFile) -> Self {
        let calls = t
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let by = if s.in_property { " [property]" } else { "" };
                format!(
                    "{}. {}({}) from {} value {}{by}",
                    i + 1,
                    s.function,
                    s.args.join(", "),
                    s.sender,
                    s.value
                )
            })
            .collect();
        let span = t.failing_span;
        let (failing_at, failing_text) = if span.end <= spec_src.text().len() {
            let (l, c) = spec_src.line_col(span.start);
            (format!("{}:{l}:{c}", spec_src.name()), spec_src.slice(span).to_string())
        } else {
            (format!("{}@{}", spec_src.name(), span.start), String::new())
        };
        Counterexample {
            property: property.to_string(),
            deployer: t.deployer.clone(),
            constructor_args: t.constructor_args.clone(),
            calls,
            inputs: t.property_inputs.clone(),
            failing_at,
            failing_text,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ReportRecord {
    pub id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ref_entry_id: Option<String>,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    /// Position among compilable candidates, from 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Verdict label; absent when the property was not verified.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    pub property: String,
}

/// Wall-clock timings, kept apart from the records so that reports of
/// replayed runs compare byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub id: String,
    pub generation_ms: u64,
    pub verification_ms: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub records: Vec<ReportRecord>,
    pub timings: Vec<Timing>,
}

/// Fill verdict, reason and counterexample from verification results of
/// one property text.
pub fn apply_verdicts(r: &mut ReportRecord, results: &[PropertyResult], spec_src: &SourceFile) {
    let verdicts: Vec<Verdict> = results.iter().map(|x| x.verdict.clone()).collect();
    let v = ppgpt_core::verifier::combine(&verdicts);
    r.verdict = Some(v.label().to_string());
    r.reason = match &v {
        Verdict::Unknown(why) => Some(why.clone()),
        _ => None,
    };
    r.counterexample = results.iter().find_map(|x| {
        let name = match &x.function {
            Some(f) if x.kind == "invariant" => format!("{}@{f}", x.name),
            _ => x.name.clone(),
        };
        x.verdict.trace().map(|t| Counterexample::new(&name, t, spec_src))
    });
}

impl RunReport {
    /// Records by score, highest first, then unscored records; ties by id.
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| match (a.score, b.score) {
            (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.id.cmp(&b.id)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.id.cmp(&b.id),
        });
    }

    pub fn any_violated(&self) -> bool {
        self.records.iter().any(|r| r.verdict.as_deref() == Some("Violated"))
    }

    pub fn exit_code(&self) -> u8 {
        if self.any_violated() {
            crate::EXIT_VIOLATED
        } else {
            crate::EXIT_OK
        }
    }

    pub fn to_jsonl(&self) -> String {
        lines(&self.records)
    }

    pub fn timings_jsonl(&self) -> String {
        lines(&self.timings)
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let count = |label: &str| {
            self.records
                .iter()
                .filter(|r| r.verdict.as_deref() == Some(label))
                .count()
        };
        let failed = self.records.iter().filter(|r| r.status == Some(Status::Failed)).count();
        let _ = writeln!(s, "{} properties", self.records.len());
        if failed > 0 {
            let _ = writeln!(s, "  not compilable: {failed}");
        }
        for label in ["Proven", "VacuouslyProven", "Violated", "Unknown"] {
            let _ = writeln!(s, "  {label}: {}", count(label));
        }
        for r in &self.records {
            let score = r.score.map_or("-".to_string(), |x| format!("{x:.4}"));
            let verdict = r.verdict.as_deref().unwrap_or(match r.status {
                Some(Status::Failed) => "not compilable",
                _ => "not verified",
            });
            let _ = write!(s, "{:<40} score {score:>7}  {verdict}", r.id);
            if let Some(why) = &r.reason {
                let _ = write!(s, " ({why})");
            }
            s.push('\n');
            if let Some(c) = &r.counterexample {
                for call in &c.calls {
                    let _ = writeln!(s, "    {call}");
                }
                let _ = writeln!(s, "    fails at {}: {}", c.failing_at, c.failing_text);
            }
        }
        s
    }
}

fn lines<T: Serialize>(xs: &[T]) -> String {
    xs.iter()
        .map(|x| serde_json::to_string(x).expect("report records serialize") + "\n")
        .collect()
}
