//! Pipeline stages: load knowledge, retrieve, generate and revise, rank,
//! verify.

use crate::config::{Config, EmbedMode, ProviderMode};
use crate::report::{apply_verdicts, ReportRecord, RunReport, Timing};
use crate::CliError;
use ppgpt_core::checker::{compile_candidate, PropertyKind};
use ppgpt_core::frontend::{load_program, load_specs};
use ppgpt_core::ir::{Program, Spec};
use ppgpt_core::solver::SolverConfig;
use ppgpt_core::verifier::{verify_spec, PropertyResult, VerifyOptions};
use ppgpt_core::{render_diagnostics, SourceFile};
use ppgpt_rag::embed::{Embedder, HashedEmbedder, RemoteEmbedder};
use ppgpt_rag::generation::{
    generate_candidate, generated_kind, revise_until_compilable, summarize, CandidateProperty, Status, SummaryMode,
    Target,
};
use ppgpt_rag::knowledge::{parse_jsonl, KnowledgeEntry};
use ppgpt_rag::provider::{GenParams, LlmProvider, RecordProvider, RemoteProvider, ReplayProvider, KEY_ENV};
use ppgpt_rag::ranking::{features, rank_all, FeatureVector, Texts};
use ppgpt_rag::store::{KnowledgeStore, FORMAT};
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

pub fn provider(cfg: &Config) -> Result<Box<dyn LlmProvider>, CliError> {
    let remote = || {
        Box::new(RemoteProvider::new(
            cfg.provider_endpoint.clone(),
            cfg.provider_model.clone(),
            cfg.provider_max_concurrent,
        ))
    };
    Ok(match cfg.provider_mode {
        ProviderMode::Remote => remote(),
        ProviderMode::Record => {
            Box::new(RecordProvider::new(remote(), &cfg.provider_fixtures[0]).map_err(CliError::at("provider"))?)
        }
        ProviderMode::Replay => {
            Box::new(ReplayProvider::load(&cfg.provider_fixtures).map_err(CliError::at("provider"))?)
        }
    })
}

pub fn embedder(cfg: &Config) -> Box<dyn Embedder> {
    match cfg.embed_mode {
        EmbedMode::Hashed => Box::new(HashedEmbedder::new(cfg.embed_dim)),
        EmbedMode::Remote => Box::new(RemoteEmbedder {
            endpoint: cfg.embed_endpoint.clone(),
            model: cfg.embed_model.clone(),
            key: std::env::var(KEY_ENV).ok(),
            dim: cfg.embed_dim,
        }),
    }
}

pub fn verify_options(cfg: &Config) -> VerifyOptions {
    VerifyOptions {
        solver: SolverConfig {
            cmd: cfg.solver_cmd.clone(),
            timeout_ms: cfg.solver_timeout_ms,
        },
        loop_bound: cfg.loop_bound,
        bmc_depth: cfg.bmc_depth,
        ..VerifyOptions::default()
    }
}

fn read(stage: &'static str, path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::new(stage, format!("{}: {e}", path.display())))
}

pub fn read_source(stage: &'static str, path: &Path) -> Result<SourceFile, CliError> {
    Ok(SourceFile::new(path.display().to_string(), read(stage, path)?))
}

pub fn compile_contract(src: &SourceFile) -> Result<Program, CliError> {
    load_program(src, None).map_err(|d| CliError::new("compile", render_diagnostics(&d)))
}

/// A knowledge file, or a store persisted by `ingest`.
pub fn load_store(cfg: &Config, embedder: &dyn Embedder) -> Result<KnowledgeStore, CliError> {
    let path = cfg
        .knowledge_path
        .as_deref()
        .ok_or_else(|| CliError::new("ingest", "`knowledgePath` is not configured"))?;
    let text = read("ingest", path)?;
    let persisted = text.lines().next().is_some_and(|l| l.contains(FORMAT));
    let store = if persisted {
        let s = KnowledgeStore::from_text(&text).map_err(CliError::at("ingest"))?;
        if s.dimension() != embedder.dimension() {
            return Err(CliError::new(
                "ingest",
                format!(
                    "store dimension {} does not match the embedder ({})",
                    s.dimension(),
                    embedder.dimension()
                ),
            ));
        }
        s
    } else {
        let entries = parse_jsonl(&text).map_err(CliError::at("ingest"))?;
        KnowledgeStore::ingest(&entries, embedder).map_err(CliError::at("ingest"))?
    };
    if store.is_empty() {
        return Err(CliError::new("retrieve", "no reference properties"));
    }
    Ok(store)
}

/// One generated candidate with what ranking needs.
#[derive(Clone, Debug)]
pub struct Generated {
    pub candidate: CandidateProperty,
    pub reference: KnowledgeEntry,
    pub generation_ms: u64,
}

#[derive(Clone, Debug)]
pub struct Generation {
    pub target: Target,
    pub target_summary: String,
    pub candidates: Vec<Generated>,
}

fn summary_or(provider: &dyn LlmProvider, given: &str, text: &str, mode: SummaryMode) -> Result<String, CliError> {
    if !given.trim().is_empty() {
        return Ok(given.to_string());
    }
    summarize(provider, text, mode, &GenParams::default()).map_err(CliError::at("summarize"))
}

/// Retrieve reference properties for `function` and run the generate and
/// revise loop for each, in parallel.
pub fn generate(
    cfg: &Config,
    provider: &dyn LlmProvider,
    embedder: &dyn Embedder,
    program: &Program,
    src: &SourceFile,
    function: &str,
) -> Result<Generation, CliError> {
    let store = load_store(cfg, embedder)?;
    let target = Target::of(program, src, function)
        .ok_or_else(|| CliError::new("target", format!("unknown function `{function}`")))?;
    let refs = store
        .retrieve(&target.func_code, embedder, cfg.retrieve_threshold, cfg.retrieve_max)
        .map_err(CliError::at("retrieve"))?;
    let target_summary = summary_or(provider, "", &target.func_code, SummaryMode::Code)?;
    let mut references = Vec::new();
    for r in refs {
        let mut e = r.entry;
        e.code_summary = summary_or(provider, &e.code_summary, &e.code, SummaryMode::Code)?;
        e.property_summary = summary_or(provider, &e.property_summary, &e.property, SummaryMode::Property)?;
        references.push(e);
    }
    let params = GenParams::default();
    let one = |reference: &KnowledgeEntry| {
        let t0 = Instant::now();
        let candidate = match generate_candidate(provider, reference, &target, &params) {
            Ok(c) => revise_until_compilable(provider, program, c, reference, &target, cfg.gen_max_attempts, &params),
            Err(e) => CandidateProperty {
                id: format!("{}/{}", target.func_name, reference.id),
                ref_entry_id: reference.id.clone(),
                kind: generated_kind(reference.kind),
                text: String::new(),
                attempts: 0,
                status: Status::Failed,
                reason: Some(e.to_string()),
                transcript: vec![],
            },
        };
        Generated {
            candidate,
            reference: reference.clone(),
            generation_ms: t0.elapsed().as_millis() as u64,
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.gen_workers)
        .build()
        .map_err(|e| CliError::new("generate", e.to_string()))?;
    let candidates = pool.install(|| references.par_iter().map(one).collect());
    Ok(Generation {
        target,
        target_summary,
        candidates,
    })
}

/// Compile a property text against `program` for verification.
pub fn compile_property(program: &Program, text: &str, name: &str) -> Result<(SourceFile, Vec<Spec>), String> {
    let src = SourceFile::new(name, text);
    let c = compile_candidate(program, &src, None, None);
    if !c.compiles() {
        return Err(render_diagnostics(&c.diagnostics));
    }
    Ok((src, c.units.into_iter().map(|(_, s)| s).collect()))
}

pub fn verify_specs(program: &Program, specs: &[Spec], opts: &VerifyOptions) -> Vec<PropertyResult> {
    specs.iter().flat_map(|s| verify_spec(program, s, opts)).collect()
}

/// Features of every compilable candidate, in input order.
pub fn candidate_features(
    provider: &dyn LlmProvider,
    embedder: &dyn Embedder,
    g: &Generation,
) -> Result<Vec<Option<FeatureVector>>, CliError> {
    g.candidates
        .iter()
        .map(|x| {
            if x.candidate.status != Status::Compilable {
                return Ok(None);
            }
            let summary = summary_or(provider, "", &x.candidate.text, SummaryMode::Property)?;
            let r = &x.reference;
            let reference = Texts {
                code: &r.code,
                code_summary: &r.code_summary,
                property: &r.property,
                property_summary: &r.property_summary,
            };
            let subject = Texts {
                code: &g.target.func_code,
                code_summary: &g.target_summary,
                property: &x.candidate.text,
                property_summary: &summary,
            };
            features(embedder, reference, subject)
                .map(Some)
                .map_err(CliError::at("rank"))
        })
        .collect()
}

/// Rank candidates, verify the top `rank.k`, and build the report.
pub fn rank_and_verify(
    cfg: &Config,
    program: &Program,
    g: &Generation,
    feats: &[Option<FeatureVector>],
) -> Result<RunReport, CliError> {
    let scored: Vec<((usize, &str), FeatureVector)> = feats
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.map(|f| ((i, g.candidates[i].candidate.id.as_str()), f)))
        .collect();
    let ranked = rank_all(scored, |x| x.1, &cfg.rank_weights).map_err(CliError::at("rank"))?;
    let mut report = RunReport::default();
    let mut rank_of = vec![None; g.candidates.len()];
    for (pos, r) in ranked.iter().enumerate() {
        rank_of[r.item.0] = Some((pos + 1, r.score));
    }
    let opts = verify_options(cfg);
    for (i, x) in g.candidates.iter().enumerate() {
        let c = &x.candidate;
        let mut rec = ReportRecord {
            id: c.id.clone(),
            ref_entry_id: Some(c.ref_entry_id.clone()),
            kind: c.kind.to_string(),
            status: Some(c.status),
            attempts: Some(c.attempts),
            rank: rank_of[i].map(|r| r.0),
            features: feats[i],
            score: rank_of[i].map(|r| r.1),
            verdict: None,
            reason: c.reason.clone(),
            counterexample: None,
            property: c.text.clone(),
        };
        let mut verification_ms = 0;
        if matches!(rank_of[i], Some((pos, _)) if pos <= cfg.rank_k) {
            let t0 = Instant::now();
            match compile_property(program, &c.text, &format!("{}.psl", c.id)) {
                Ok((src, specs)) => apply_verdicts(&mut rec, &verify_specs(program, &specs, &opts), &src),
                Err(d) => return Err(CliError::new("verify", d)),
            }
            verification_ms = t0.elapsed().as_millis() as u64;
        }
        report.timings.push(Timing {
            id: c.id.clone(),
            generation_ms: x.generation_ms,
            verification_ms,
        });
        report.records.push(rec);
    }
    report.sort();
    Ok(report)
}

pub fn run_pipeline(
    cfg: &Config,
    provider: &dyn LlmProvider,
    embedder: &dyn Embedder,
    contract: &Path,
    function: &str,
) -> Result<(RunReport, Vec<CandidateProperty>), CliError> {
    let src = read_source("compile", contract)?;
    let program = compile_contract(&src)?;
    let g = generate(cfg, provider, embedder, &program, &src, function)?;
    let feats = candidate_features(provider, embedder, &g)?;
    let report = rank_and_verify(cfg, &program, &g, &feats)?;
    Ok((report, g.candidates.into_iter().map(|x| x.candidate).collect()))
}

/// Verify a hand-written property file.
pub fn verify_file(cfg: &Config, contract: &Path, spec: &Path) -> Result<RunReport, CliError> {
    let src = read_source("compile", contract)?;
    let program = compile_contract(&src)?;
    let spec_src = read_source("compile", spec)?;
    let specs: Vec<Spec> = load_specs(&program, &spec_src)
        .map_err(|d| CliError::new("compile", render_diagnostics(&d)))?
        .into_iter()
        .map(|(_, s)| s)
        .collect();
    let opts = verify_options(cfg);
    let mut report = RunReport::default();
    for s in &specs {
        let t0 = Instant::now();
        let results = verify_spec(&program, s, &opts);
        let ms = t0.elapsed().as_millis() as u64;
        let (name, kind) = match s {
            Spec::Rule(r) => (r.name.clone(), PropertyKind::Rule),
            Spec::Function(f) => (f.name.clone(), PropertyKind::Condition),
            Spec::Invariant(i) => (i.name.clone(), PropertyKind::Invariant),
        };
        let span = results.first().map(|r| r.span);
        let mut rec = ReportRecord {
            id: name.clone(),
            ref_entry_id: None,
            kind: kind.to_string(),
            status: None,
            attempts: None,
            rank: None,
            features: None,
            score: None,
            verdict: None,
            reason: None,
            counterexample: None,
            property: span.map_or(String::new(), |sp| spec_src.slice(sp).to_string()),
        };
        apply_verdicts(&mut rec, &results, &spec_src);
        report.timings.push(Timing {
            id: name,
            generation_ms: 0,
            verification_ms: ms,
        });
        report.records.push(rec);
    }
    Ok(report)
}
