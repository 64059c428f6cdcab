//! Embedding providers. Vectors are unit-normalized by the store, so
//! providers may return any nonzero scale.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;
    fn embed(&self, text: &str) -> Result<Vec<f64>>;
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale `v` to unit Euclidean norm.
pub fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = dot(&v, &v).sqrt();
    if n == 0.0 {
        return Err(Error::Embed("zero vector".into()));
    }
    for x in &mut v {
        *x /= n;
    }
    Ok(v)
}

/// Cosine similarity of the embeddings of two texts.
pub fn similarity(e: &dyn Embedder, a: &str, b: &str) -> Result<f64> {
    Ok(dot(&normalize(e.embed(a)?)?, &normalize(e.embed(b)?)?))
}

/// Deterministic offline embedder: token counts hashed into a fixed number
/// of buckets.
#[derive(Clone, Debug)]
pub struct HashedEmbedder {
    dim: usize,
}

impl HashedEmbedder {
    pub const DEFAULT_DIMENSION: usize = 256;

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        HashedEmbedder { dim }
    }

    fn bucket(&self, token: &str) -> usize {
        let h = Sha256::digest(token.as_bytes());
        let mut b = [0u8; 8];
        b.copy_from_slice(&h[..8]);
        (u64::from_le_bytes(b) % self.dim as u64) as usize
    }
}

impl Default for HashedEmbedder {
    fn default() -> Self {
        HashedEmbedder::new(Self::DEFAULT_DIMENSION)
    }
}

/// Identifier-like runs and single punctuation characters, lowercased.
pub fn tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' || c == '$' {
            cur.extend(c.to_lowercase());
            continue;
        }
        if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl Embedder for HashedEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        for t in tokens(text) {
            v[self.bucket(&t)] += 1.0;
        }
        if v.iter().all(|x| *x == 0.0) {
            // Empty text still needs a direction.
            v[0] = 1.0;
        }
        normalize(v)
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    text: &'a str,
    #[serde(skip_serializing_if = "str::is_empty")]
    model: &'a str,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vector: Vec<f64>,
}

/// HTTP embedder: POST `{text, model}` and read `{vector}`.
#[derive(Clone, Debug)]
pub struct RemoteEmbedder {
    pub endpoint: String,
    pub model: String,
    pub key: Option<String>,
    pub dim: usize,
}

impl Embedder for RemoteEmbedder {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>> {
        let mut req = ureq::post(&self.endpoint);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(EmbedRequest {
                text,
                model: &self.model,
            })
            .map_err(|e| Error::Embed(e.to_string()))?;
        let body: EmbedResponse = resp.body_mut().read_json().map_err(|e| Error::Embed(e.to_string()))?;
        if body.vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: body.vector.len(),
            });
        }
        Ok(body.vector)
    }
}
