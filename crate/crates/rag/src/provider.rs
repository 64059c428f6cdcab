//! LLM providers: a remote chat-completion client, a recorder wrapping it,
//! and replay from fixture files.

use crate::{sha256_hex, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub temperature: f64,
    pub top_p: f64,
    pub frequency_penalty: f64,
    pub presence_penalty: f64,
    pub max_tokens: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            temperature: 0.8,
            top_p: 1.0,
            frequency_penalty: 0.0,
            presence_penalty: 0.0,
            max_tokens: 2000,
        }
    }
}

pub trait LlmProvider: Send + Sync {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String>;
}

pub fn prompt_hash(prompt: &str) -> String {
    sha256_hex(prompt)
}

/// One recorded exchange. A `promptHash` of `*` matches any prompt that has
/// no exact record, in file order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    #[serde(rename = "promptHash")]
    pub prompt_hash: String,
    pub response: String,
}

pub const ANY_PROMPT: &str = "*";

pub fn read_exchanges(path: &Path) -> Result<Vec<Exchange>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line)?);
    }
    Ok(out)
}

/// Serves recorded responses. Several records for the same prompt are
/// returned in order.
#[derive(Debug, Default)]
pub struct ReplayProvider {
    queues: Mutex<BTreeMap<String, VecDeque<String>>>,
}

impl ReplayProvider {
    pub fn new(records: impl IntoIterator<Item = Exchange>) -> Self {
        let mut queues: BTreeMap<String, VecDeque<String>> = BTreeMap::new();
        for r in records {
            queues.entry(r.prompt_hash).or_default().push_back(r.response);
        }
        ReplayProvider {
            queues: Mutex::new(queues),
        }
    }

    /// Responses served to any prompt, in order.
    pub fn scripted<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new(responses.into_iter().map(|r| Exchange {
            prompt_hash: ANY_PROMPT.into(),
            response: r.into(),
        }))
    }

    pub fn load(paths: &[PathBuf]) -> Result<Self> {
        let mut all = Vec::new();
        for p in paths {
            all.extend(read_exchanges(p)?);
        }
        Ok(Self::new(all))
    }
}

impl LlmProvider for ReplayProvider {
    fn complete(&self, prompt: &str, _params: &GenParams) -> Result<String> {
        let h = prompt_hash(prompt);
        let mut q = self.queues.lock().unwrap();
        for key in [h.as_str(), ANY_PROMPT] {
            if let Some(r) = q.get_mut(key).and_then(VecDeque::pop_front) {
                return Ok(r);
            }
        }
        Err(Error::Provider(format!("no recorded response for prompt {h}")))
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Limiter {
    fn run<T>(&self, f: impl FnOnce() -> T) -> T {
        let mut n = self.free.lock().unwrap();
        while *n == 0 {
            n = self.cv.wait(n).unwrap();
        }
        *n -= 1;
        drop(n);
        let out = f();
        *self.free.lock().unwrap() += 1;
        self.cv.notify_one();
        out
    }
}

/// OpenAI-style chat-completion client.
#[derive(Debug)]
pub struct RemoteProvider {
    pub endpoint: String,
    pub model: String,
    key: Option<String>,
    limiter: Limiter,
}

pub const KEY_ENV: &str = "PROPGPT_LLM_KEY";

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, max_concurrent: usize) -> Self {
        RemoteProvider {
            endpoint: endpoint.into(),
            model: model.into(),
            key: std::env::var(KEY_ENV).ok(),
            limiter: Limiter {
                free: Mutex::new(max_concurrent.max(1)),
                cv: Condvar::new(),
            },
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl LlmProvider for RemoteProvider {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "frequency_penalty": params.frequency_penalty,
            "presence_penalty": params.presence_penalty,
            "max_tokens": params.max_tokens,
        });
        self.limiter.run(|| {
            let mut req = ureq::post(&self.endpoint);
            if let Some(k) = &self.key {
                req = req.header("Authorization", &format!("Bearer {k}"));
            }
            let mut resp = req.send_json(&body).map_err(|e| Error::Provider(e.to_string()))?;
            let r: ChatResponse = resp
                .body_mut()
                .read_json()
                .map_err(|e| Error::Provider(e.to_string()))?;
            r.choices
                .into_iter()
                .next()
                .map(|c| c.message.content)
                .ok_or_else(|| Error::Provider("empty completion".into()))
        })
    }
}

/// Forwards to another provider and appends every exchange to a fixture
/// file.
pub struct RecordProvider {
    inner: Box<dyn LlmProvider>,
    out: Mutex<std::fs::File>,
}

impl RecordProvider {
    pub fn new(inner: Box<dyn LlmProvider>, path: &Path) -> Result<Self> {
        let f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RecordProvider {
            inner,
            out: Mutex::new(f),
        })
    }
}

impl LlmProvider for RecordProvider {
    fn complete(&self, prompt: &str, params: &GenParams) -> Result<String> {
        let response = self.inner.complete(prompt, params)?;
        let mut line = serde_json::to_string(&Exchange {
            prompt_hash: prompt_hash(prompt),
            response: response.clone(),
        })?;
        line.push('\n');
        self.out.lock().unwrap().write_all(line.as_bytes())?;
        Ok(response)
    }
}
