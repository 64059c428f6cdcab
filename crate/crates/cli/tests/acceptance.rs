//! Runs every acceptance criterion and prints one PASS/FAIL line each.

#[path = "../../core/tests/oracle/mod.rs"]
mod oracle;

use ppgpt_core::frontend::printer::print_spec_units;
use ppgpt_core::frontend::{load_program, load_specs, parse_spec};
use ppgpt_core::ir::{Program, Spec};
use ppgpt_core::verifier::{verify_property, Property, Verdict, VerifyOptions};
use ppgpt_core::{render_diagnostics, SourceFile};
use ppgpt_rag::embed::HashedEmbedder;
use ppgpt_rag::generation::{generate_candidate, revise_until_compilable, Status, Target, DEFAULT_MAX_ATTEMPTS};
use ppgpt_rag::knowledge::KnowledgeEntry;
use ppgpt_rag::prompts::PromptKind;
use ppgpt_rag::provider::{GenParams, ReplayProvider};
use ppgpt_rag::ranking::{fit_weights, rank_topk, score, FeatureVector, TrainingRecord, Weights};
use ppgpt_rag::stats::{compile_stats, recall_precision, MatchFile};
use ppgpt_rag::store::KnowledgeStore;
use ppgpt_rag::PropertyKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($c:expr, $($m:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$c {
            return Err(format!($($m)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> SourceFile {
    SourceFile::new(rel, std::fs::read_to_string(fixtures().join(rel)).unwrap())
}

fn program(rel: &str) -> Result<Program, String> {
    load_program(&read(rel), None).map_err(|d| render_diagnostics(&d))
}

fn specs(p: &Program, rel: &str) -> Result<Vec<Spec>, String> {
    Ok(load_specs(p, &read(rel))
        .map_err(|d| render_diagnostics(&d))?
        .into_iter()
        .map(|(_, s)| s)
        .collect())
}

fn property(s: &Spec) -> Property<'_> {
    match s {
        Spec::Function(f) => Property::of_function_spec(f),
        Spec::Rule(r) => Property::Rule(r),
        Spec::Invariant(_) => panic!("invariants are checked per function"),
    }
}

fn verdict(contract: &str, spec: &str) -> Result<Verdict, String> {
    let p = program(contract)?;
    let s = specs(&p, spec)?;
    Ok(verify_property(&p, property(&s[0]), &VerifyOptions::default()))
}

fn within(t0: Instant, limit: Duration, detail: String) -> Outcome {
    let took = t0.elapsed();
    if took >= limit {
        return Err(format!("took {took:?}, limit {limit:?}"));
    }
    Ok(format!("{detail} in {:.2?}", took))
}

fn grammar_corpus() -> Outcome {
    let t0 = Instant::now();
    let mut paths: Vec<_> = std::fs::read_dir(fixtures().join("psl"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "psl"))
        .collect();
    paths.sort();
    ensure!(paths.len() >= 20, "only {} corpus files", paths.len());
    let vault = program("psl/vault.msol")?;
    for p in &paths {
        let src = SourceFile::new(p.display().to_string(), std::fs::read_to_string(p).unwrap());
        let units = parse_spec(&src).map_err(|d| render_diagnostics(&d))?;
        let printed = print_spec_units(&units);
        let again = parse_spec(&SourceFile::new("printed.psl", printed)).map_err(|d| render_diagnostics(&d))?;
        let a: Vec<_> = units.iter().map(|u| u.without_spans()).collect();
        let b: Vec<_> = again.iter().map(|u| u.without_spans()).collect();
        ensure!(a == b, "{} does not round-trip", src.name());
        load_specs(&vault, &src).map_err(|d| render_diagnostics(&d))?;
    }
    let neg = read("psl/negative/statement_in_precondition.psl");
    let d = parse_spec(&neg).err().ok_or("negative case accepted")?;
    let text = render_diagnostics(&d);
    ensure!(
        text == "E0004 psl/negative/statement_in_precondition.psl:2:20: only expression statements are permitted in a precondition\n",
        "unexpected diagnostic {text:?}"
    );
    within(
        t0,
        Duration::from_secs(5),
        format!("{} files round-trip, E0004 rejected", paths.len()),
    )
}

fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut checked = 0;
    let mut violating = 0;
    for seed in 0..oracle::CONTRACTS {
        let t = oracle::check_seed(seed)?;
        checked += t.checked;
        violating += t.violating;
    }
    ensure!(oracle::CONTRACTS >= 50, "too few contracts");
    within(
        t0,
        Duration::from_secs(600),
        format!(
            "{} contracts, {checked} properties ({violating} violable) agree",
            oracle::CONTRACTS
        ),
    )
}

fn case_studies() -> Outcome {
    let t0 = Instant::now();
    let p = program("envelope/envelope.msol")?;
    let s = specs(&p, "envelope/rule.psl")?;
    let prop = property(&s[0]);
    let v = verify_property(&p, prop, &VerifyOptions::default());
    let t = v.trace().ok_or(format!("envelope rule: {v}"))?;
    let calls: Vec<_> = t.steps.iter().map(|s| s.function.as_str()).collect();
    ensure!(calls == ["addEnvelope", "addEnvelope"], "trace {calls:?}");
    let failing = t.replay(&p, prop).ok_or("trace does not replay")?;
    ensure!(
        read("envelope/rule.psl").slice(failing).starts_with("assert("),
        "replay fails elsewhere"
    );

    let z = program("zklink/zklink.msol")?;
    let all = specs(&z, "zklink/withdraw.psl")?;
    let Spec::Function(f) = &all[0] else {
        return Err("withdraw.psl is not a function spec".into());
    };
    ensure!(f.pre.len() == 3, "{} preconditions", f.pre.len());
    let v = verdict("zklink/zklink.msol", "zklink/withdraw_first_post.psl")?;
    ensure!(matches!(v, Verdict::Proven), "first postcondition: {v}");
    let v = verdict("zklink/zklink_mutated.msol", "zklink/withdraw_first_post.psl")?;
    ensure!(v.is_violated(), "mutant: {v}");
    within(
        t0,
        Duration::from_secs(60),
        "envelope Violated by 2 calls; zklink Proven, mutant Violated".into(),
    )
}

fn over_approximation() -> Outcome {
    let v = verdict("overapprox/hash.msol", "overapprox/injective.psl")?;
    ensure!(matches!(v, Verdict::Proven), "injectivity: {v}");
    let v = verdict("overapprox/external.msol", "overapprox/external_independent.psl")?;
    ensure!(matches!(v, Verdict::Proven), "return-independent: {v}");
    let dep = verdict("overapprox/external.msol", "overapprox/external_dependent.psl")?;
    ensure!(!dep.is_proven(), "return-dependent: {dep}");
    Ok(format!(
        "injectivity Proven; external independent Proven, dependent {}",
        dep.label()
    ))
}

fn fv(a: [f64; 4]) -> FeatureVector {
    FeatureVector::new(a[0], a[1], a[2], a[3])
}

fn ranking() -> Outcome {
    let s = score(&fv([0.8, 0.7, 0.6, 0.5]), &Weights::PUBLISHED).map_err(|e| e.to_string())?;
    ensure!((s - 0.6650).abs() < 1e-9, "score {s}");
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.gen_range(1..10);
        let items: Vec<(String, FeatureVector)> = (0..n)
            .map(|i| (format!("c{i}"), fv([0; 4].map(|_: u8| rng.gen_range(-1.0..1.0)))))
            .collect();
        let w = Weights::from_array([0; 4].map(|_: u8| rng.gen_range(0.01..1.0)));
        let a = rank_topk(items.clone(), |s| s, &w, 1).map_err(|e| e.to_string())?;
        let b = rank_topk(items, |s| s, &w.normalized(), 1).map_err(|e| e.to_string())?;
        ensure!(a[0].item == b[0].item, "argmax changed under normalization");
    }
    let mut metrics = None;
    for _ in 0..100 {
        let w = [0; 4].map(|_: u8| rng.gen_range(-1.0..1.0));
        let recs: Vec<TrainingRecord> = (0..rng.gen_range(4..40))
            .map(|_| {
                let f = fv([0; 4].map(|_: u8| rng.gen_range(-1.0..1.0)));
                let actual = f.as_array().iter().zip(w).map(|(x, w)| x * w).sum();
                TrainingRecord { features: f, actual }
            })
            .collect();
        let fit = fit_weights(&recs).map_err(|e| e.to_string())?;
        for (a, b) in fit.raw.as_array().iter().zip(w) {
            ensure!((a - b).abs() < 1e-6, "recovered {a}, planted {b}");
        }
        metrics = Some(fit.metrics);
    }
    let m = serde_json::to_value(metrics.unwrap()).unwrap();
    let names = ["mae", "mse", "rmse", "r2", "mape", "mde"];
    ensure!(names.iter().all(|n| m[n].is_number()), "metrics {m}");
    Ok(format!(
        "score {s:.4}; argmax stable on 1000 sets; 100 planted fits within 1e-6; metrics {names:?}"
    ))
}

const BAD: &str = "rule broken() {\n addEnvelope(missingVar);\n assert(true);\n}";
const UNCOVERED: &str = "rule idle() {\n address $c = envelopeCreator(\"x\");\n assert($c == $c);\n}";

fn revise_loop() -> Outcome {
    let p = program("envelope/envelope.msol")?;
    let target = Target::of(&p, &read("envelope/envelope.msol"), "addEnvelope").ok_or("no addEnvelope")?;
    let good = read("envelope/rule.psl").text().trim().to_string();
    let reference = KnowledgeEntry {
        id: "ref".into(),
        code: "function add() public {}".into(),
        code_summary: String::new(),
        property: "rule r() { add(); assert(true); }".into(),
        property_summary: String::new(),
        kind: PropertyKind::Rule,
        source: String::new(),
    };
    let run = |script: Vec<&str>| {
        let prov = ReplayProvider::scripted(script);
        let params = GenParams::default();
        let c = generate_candidate(&prov, &reference, &target, &params).map_err(|e| e.to_string())?;
        Ok::<_, String>(revise_until_compilable(
            &prov,
            &p,
            c,
            &reference,
            &target,
            DEFAULT_MAX_ATTEMPTS,
            &params,
        ))
    };
    let a = run(vec![&good])?;
    let b = run(vec![BAD, BAD, &good])?;
    let c = run(vec![BAD; 12])?;
    let got = [(a.attempts, a.status), (b.attempts, b.status), (c.attempts, c.status)];
    ensure!(
        got == [(0, Status::Compilable), (2, Status::Compilable), (9, Status::Failed)],
        "attempts {got:?}"
    );
    ensure!(c.transcript.len() == 10, "{} provider calls", c.transcript.len());
    let d = run(vec![BAD, UNCOVERED, BAD, &good])?;
    let kinds: Vec<_> = d.transcript.iter().map(|t| t.kind).collect();
    ensure!(
        kinds
            == [
                PromptKind::RuleGen,
                PromptKind::CommonRevise,
                PromptKind::SpecialRevise,
                PromptKind::CommonRevise
            ],
        "prompt kinds {kinds:?}"
    );
    let special = [&a, &b, &c]
        .iter()
        .flat_map(|x| &x.transcript)
        .filter(|t| t.kind == PromptKind::SpecialRevise)
        .count();
    ensure!(special == 0, "special prompt without a coverage failure");
    let stats = compile_stats(&[a, b, c, d], DEFAULT_MAX_ATTEMPTS);
    Ok(format!(
        "attempts 0, 2, 9-then-failed; special prompt only after coverage failure; harness success rate {:.2}",
        stats.success_rate
    ))
}

fn retrieval() -> Outcome {
    let t0 = Instant::now();
    let e = HashedEmbedder::default();
    let entries: Vec<KnowledgeEntry> = [
        "function a(uint256 x) public { total += x; }",
        "function b() public { owner = msg.sender; }",
    ]
    .iter()
    .enumerate()
    .map(|(i, code)| KnowledgeEntry {
        id: format!("e{i}"),
        code: code.to_string(),
        code_summary: String::new(),
        property: String::new(),
        property_summary: String::new(),
        kind: PropertyKind::Rule,
        source: String::new(),
    })
    .collect();
    let store = KnowledgeStore::ingest(&entries, &e).map_err(|e| e.to_string())?;
    for x in &entries {
        let r = store.retrieve(&x.code, &e, 0.8, None).map_err(|e| e.to_string())?;
        ensure!(
            r[0].entry == *x && (r[0].similarity - 1.0).abs() < 1e-6,
            "self retrieval of {}",
            x.id
        );
    }
    let mut hand = KnowledgeStore::new(2);
    hand.insert_vector(entries[0].clone(), vec![0.7, (1.0f64 - 0.49).sqrt()])
        .map_err(|e| e.to_string())?;
    let r = hand
        .retrieve_vector(vec![1.0, 0.0], 0.8, None)
        .map_err(|e| e.to_string())?;
    ensure!(r.is_empty(), "0.7 entry passed the 0.8 threshold");
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.jsonl");
    store.persist(&path).map_err(|e| e.to_string())?;
    let loaded = KnowledgeStore::load(&path).map_err(|e| e.to_string())?;
    for x in &entries {
        let a = serde_json::to_string(&store.retrieve(&x.code, &e, -1.0, None).unwrap()).unwrap();
        let b = serde_json::to_string(&loaded.retrieve(&x.code, &e, -1.0, None).unwrap()).unwrap();
        ensure!(a == b, "retrieval differs after reload");
    }
    within(
        t0,
        Duration::from_secs(5),
        "self-similarity 1.0, 0.7 filtered, reload byte-identical".into(),
    )
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = Command::new(env!("CARGO_BIN_EXE_ppgpt"))
            .arg("pipeline")
            .arg("--config")
            .arg(fixtures().join("pipeline/ppgpt.conf"))
            .arg("--contract")
            .arg(fixtures().join("envelope/envelope.msol"))
            .args(["--function", "addEnvelope", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        (
            o.status.code(),
            std::fs::read(&out).unwrap_or_default(),
            String::from_utf8_lossy(&o.stderr).into_owned(),
        )
    };
    let (ca, ra, err) = run("a.jsonl");
    let (cb, rb, _) = run("b.jsonl");
    ensure!(ca == Some(2) && cb == Some(2), "exit codes {ca:?} {cb:?}: {err}");
    ensure!(!ra.is_empty() && ra == rb, "reports differ");
    let text = std::fs::read_to_string(fixtures().join("pipeline/matches.json")).unwrap();
    let m: MatchFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let rp = recall_precision(&m);
    ensure!(
        (rp.recall - 2.0 / 3.0).abs() < 1e-12 && rp.precision == 1.0,
        "harness gave {rp:?}"
    );
    Ok(format!(
        "two replayed runs byte-identical ({} bytes), exit 2; labelled fixture recall {:.2}, precision {:.2}",
        ra.len(),
        rp.recall,
        rp.precision
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("grammar coverage", grammar_corpus),
        ("prover-oracle equivalence", oracle_equivalence),
        ("case studies", case_studies),
        ("over-approximation", over_approximation),
        ("ranking arithmetic", ranking),
        ("revise loop", revise_loop),
        ("retrieval", retrieval),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(d) => println!("PASS criterion {} ({name}): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {d}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
