//! Line-oriented `key = value` configuration.

use crate::CliError;
use ppgpt_rag::ranking::Weights;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProviderMode {
    Remote,
    Record,
    Replay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedMode {
    /// Offline hashed token counts.
    Hashed,
    Remote,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub knowledge_path: Option<PathBuf>,
    pub solver_cmd: Vec<String>,
    pub solver_timeout_ms: u64,
    pub retrieve_threshold: f64,
    pub retrieve_max: Option<usize>,
    pub gen_max_attempts: usize,
    /// Reference properties processed concurrently.
    pub gen_workers: usize,
    pub rank_k: usize,
    pub rank_weights: Weights,
    pub provider_mode: ProviderMode,
    pub provider_endpoint: String,
    pub provider_model: String,
    pub provider_max_concurrent: usize,
    /// Replay sources, or the single record target.
    pub provider_fixtures: Vec<PathBuf>,
    pub embed_mode: EmbedMode,
    pub embed_endpoint: String,
    pub embed_model: String,
    pub embed_dim: usize,
    pub bmc_depth: usize,
    pub loop_bound: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            knowledge_path: None,
            solver_cmd: vec!["z3".into(), "-in".into()],
            solver_timeout_ms: 10_000,
            retrieve_threshold: 0.8,
            retrieve_max: None,
            gen_max_attempts: 9,
            gen_workers: 4,
            rank_k: 2,
            rank_weights: Weights::default(),
            provider_mode: ProviderMode::Remote,
            provider_endpoint: "https://api.openai.com/v1/chat/completions".into(),
            provider_model: "gpt-4-turbo".into(),
            provider_max_concurrent: 4,
            provider_fixtures: vec![],
            embed_mode: EmbedMode::Hashed,
            embed_endpoint: String::new(),
            embed_model: String::new(),
            embed_dim: ppgpt_rag::embed::HashedEmbedder::DEFAULT_DIMENSION,
            bmc_depth: 3,
            loop_bound: 5,
        }
    }
}

fn bad(line: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::new("config", format!("line {line}: {msg}"))
}

fn positive(line: usize, key: &str, v: &str) -> Result<usize, CliError> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(bad(line, format!("`{key}` must be a positive integer"))),
    }
}

impl Config {
    /// Parse config text. Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Config, CliError> {
        let mut c = Config::default();
        let path = |v: &str| base.join(v);
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad(n, "expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "knowledgePath" => c.knowledge_path = Some(path(v)),
                "solver.cmd" => {
                    c.solver_cmd = v.split_whitespace().map(String::from).collect();
                    if c.solver_cmd.is_empty() {
                        return Err(bad(n, "`solver.cmd` is empty"));
                    }
                }
                "solver.timeout_ms" => c.solver_timeout_ms = positive(n, k, v)? as u64,
                "retrieve.threshold" => {
                    c.retrieve_threshold = match v.parse::<f64>() {
                        Ok(t) if (-1.0..=1.0).contains(&t) => t,
                        _ => return Err(bad(n, "`retrieve.threshold` must be a number in [-1, 1]")),
                    }
                }
                "retrieve.max" => c.retrieve_max = Some(positive(n, k, v)?),
                "gen.max_attempts" => {
                    c.gen_max_attempts = v.parse().map_err(|_| bad(n, "`gen.max_attempts` must be an integer"))?
                }
                "gen.workers" => c.gen_workers = positive(n, k, v)?,
                "rank.k" => c.rank_k = positive(n, k, v)?,
                "rank.weights" => {
                    let w: Vec<f64> = v
                        .split(',')
                        .map(|x| x.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad(n, "`rank.weights` must be four numbers"))?;
                    let w: [f64; 4] = w
                        .try_into()
                        .map_err(|_| bad(n, "`rank.weights` must be four numbers"))?;
                    let w = Weights::from_array(w);
                    if !w.sum().is_finite() || w.sum() <= 0.0 {
                        return Err(bad(n, "`rank.weights` must have a positive sum"));
                    }
                    c.rank_weights = w.normalized();
                }
                "provider.mode" => {
                    c.provider_mode = match v {
                        "remote" => ProviderMode::Remote,
                        "record" => ProviderMode::Record,
                        "replay" => ProviderMode::Replay,
                        _ => return Err(bad(n, "`provider.mode` must be remote, record or replay")),
                    }
                }
                "provider.endpoint" => c.provider_endpoint = v.into(),
                "provider.model" => c.provider_model = v.into(),
                "provider.max_concurrent" => c.provider_max_concurrent = positive(n, k, v)?,
                "provider.fixtures" => {
                    c.provider_fixtures = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(path)
                        .collect()
                }
                "embed.mode" => {
                    c.embed_mode = match v {
                        "hashed" | "local" => EmbedMode::Hashed,
                        "remote" => EmbedMode::Remote,
                        _ => return Err(bad(n, "`embed.mode` must be hashed or remote")),
                    }
                }
                "embed.endpoint" => c.embed_endpoint = v.into(),
                "embed.model" => c.embed_model = v.into(),
                "embed.dim" => c.embed_dim = positive(n, k, v)?,
                "bmc.depth" => c.bmc_depth = positive(n, k, v)?,
                "loop.bound" => c.loop_bound = positive(n, k, v)?,
                _ => return Err(bad(n, format!("unknown key `{k}`"))),
            }
        }
        if c.provider_mode != ProviderMode::Remote && c.provider_fixtures.is_empty() {
            return Err(CliError::new(
                "config",
                "`provider.fixtures` is required in record and replay mode",
            ));
        }
        if c.provider_mode == ProviderMode::Record && c.provider_fixtures.len() != 1 {
            return Err(CliError::new("config", "record mode takes exactly one fixture path"));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
        Config::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}
