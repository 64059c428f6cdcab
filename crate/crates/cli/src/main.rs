use clap::{Parser, Subcommand};
use ppgpt_cli::config::Config;
use ppgpt_cli::pipeline::{self, compile_contract, read_source};
use ppgpt_cli::{CliError, EXIT_ERROR, EXIT_OK};
use ppgpt_core::checker::{compile_candidate, PropertyKind};
use ppgpt_core::render_diagnostics;
use ppgpt_rag::ranking::{fit_weights, read_training};
use ppgpt_rag::stats::{compile_stats, read_candidates, recall_precision, MatchFile};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ppgpt",
    version,
    about = "Generate, rank and verify smart contract properties"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Embed the knowledge file and persist the store to --out.
    Ingest {
        #[command(flatten)]
        common: Common,
    },
    /// Generate and revise candidate properties for one function.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        function: String,
    },
    /// Compile a property file against a contract.
    Check {
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Also require every property to exercise this function.
        #[arg(long)]
        function: Option<String>,
        /// Require properties of this kind: rule, condition or invariant.
        #[arg(long)]
        kind: Option<PropertyKind>,
    },
    /// Fit ranking weights from training records.
    Rank {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        training: PathBuf,
    },
    /// Verify a property file.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
    /// Run retrieval, generation, ranking and verification end to end.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        contract: PathBuf,
        #[arg(long)]
        function: String,
    },
    /// Recompute compile-success or recall/precision statistics.
    Stats {
        #[command(flatten)]
        common: Common,
        /// Candidate records written by `gen` or `pipeline`.
        #[arg(long, conflicts_with = "matches")]
        candidates: Option<PathBuf>,
        /// Labelled match file.
        #[arg(long)]
        matches: Option<PathBuf>,
    },
}

fn config(c: &Common) -> Result<Config, CliError> {
    match &c.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::new("output", format!("{}: {e}", path.display())))
}

/// Write the main output to --out or stdout.
fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn json<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("serializable") + "\n"
}

fn candidate_lines(cs: &[ppgpt_rag::generation::CandidateProperty]) -> String {
    cs.iter()
        .map(|c| serde_json::to_string(c).expect("serializable") + "\n")
        .collect()
}

fn run(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Ingest { common } => {
            let cfg = config(&common)?;
            let out = common.out.ok_or_else(|| CliError::new("ingest", "--out is required"))?;
            let store = pipeline::load_store(&cfg, pipeline::embedder(&cfg).as_ref())?;
            store.persist(&out).map_err(CliError::at("ingest"))?;
            eprintln!("{} reference properties", store.len());
            Ok(EXIT_OK)
        }
        Cmd::Gen {
            common,
            contract,
            function,
        } => {
            let cfg = config(&common)?;
            let provider = pipeline::provider(&cfg)?;
            let src = read_source("compile", &contract)?;
            let program = compile_contract(&src)?;
            let g = pipeline::generate(
                &cfg,
                provider.as_ref(),
                pipeline::embedder(&cfg).as_ref(),
                &program,
                &src,
                &function,
            )?;
            let cs: Vec<_> = g.candidates.into_iter().map(|x| x.candidate).collect();
            emit(&common.out, &candidate_lines(&cs))?;
            Ok(EXIT_OK)
        }
        Cmd::Check {
            contract,
            spec,
            function,
            kind,
        } => {
            let program = compile_contract(&read_source("compile", &contract)?)?;
            let src = read_source("check", &spec)?;
            let c = compile_candidate(&program, &src, kind, function.as_deref());
            let mut diags = c.diagnostics.clone();
            if let Some(f) = &function {
                diags.extend(ppgpt_core::checker::coverage_diagnostics(&program, &src, &c, f));
            }
            if diags.is_empty() {
                println!("{}: {} properties ok", src.name(), c.units.len());
                Ok(EXIT_OK)
            } else {
                eprint!("{}", render_diagnostics(&diags));
                Ok(EXIT_ERROR)
            }
        }
        Cmd::Rank { common, training } => {
            let records = read_training(&training).map_err(CliError::at("rank"))?;
            let fit = fit_weights(&records).map_err(CliError::at("rank"))?;
            emit(&common.out, &json(&fit))?;
            Ok(EXIT_OK)
        }
        Cmd::Verify { common, contract, spec } => {
            let cfg = config(&common)?;
            let report = pipeline::verify_file(&cfg, &contract, &spec)?;
            finish(&common.out, &report)
        }
        Cmd::Pipeline {
            common,
            contract,
            function,
        } => {
            let cfg = config(&common)?;
            let provider = pipeline::provider(&cfg)?;
            let embedder = pipeline::embedder(&cfg);
            let (report, cands) =
                pipeline::run_pipeline(&cfg, provider.as_ref(), embedder.as_ref(), &contract, &function)?;
            if let Some(out) = &common.out {
                write(&sidecar(out, ".candidates.jsonl"), &candidate_lines(&cands))?;
            }
            finish(&common.out, &report)
        }
        Cmd::Stats {
            common,
            candidates,
            matches,
        } => {
            let cfg = config(&common)?;
            let text = match (candidates, matches) {
                (Some(p), None) => {
                    let cs = read_candidates(&p).map_err(CliError::at("stats"))?;
                    json(&compile_stats(&cs, cfg.gen_max_attempts))
                }
                (None, Some(p)) => {
                    let raw = std::fs::read_to_string(&p)
                        .map_err(|e| CliError::new("stats", format!("{}: {e}", p.display())))?;
                    let m: MatchFile = serde_json::from_str(&raw).map_err(|e| CliError::new("stats", e.to_string()))?;
                    json(&recall_precision(&m))
                }
                _ => return Err(CliError::new("stats", "give either --candidates or --matches")),
            };
            emit(&common.out, &text)?;
            Ok(EXIT_OK)
        }
    }
}

/// Write the report and its timings, print the summary.
fn finish(out: &Option<PathBuf>, report: &ppgpt_cli::report::RunReport) -> Result<u8, CliError> {
    match out {
        Some(p) => {
            write(p, &report.to_jsonl())?;
            write(&sidecar(p, ".timings.jsonl"), &report.timings_jsonl())?;
            print!("{}", report.summary());
        }
        None => {
            print!("{}", report.to_jsonl());
            eprint!("{}", report.summary());
        }
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
