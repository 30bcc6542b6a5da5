//! Recorded and live responses of an external natural-language-understanding
//! service (categories + document sentiment).
//!
//! Responses are cached on disk under the SHA-256 of the request text, so a
//! corpus annotated once in `Live` mode can be replayed offline in `Cached`
//! mode.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{normalize_category, DomainAssignment, SentimentScore};
use crate::error::{Error, Result};

pub const ENDPOINT_ENV: &str = "NLU_ENDPOINT";
pub const API_KEY_ENV: &str = "NLU_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct NluAnalysis {
    pub categories: Vec<DomainAssignment>,
    pub sentiment: SentimentScore,
}

impl NluAnalysis {
    pub fn empty() -> Self {
        Self {
            categories: Vec::new(),
            sentiment: SentimentScore::NEUTRAL,
        }
    }
}

fn field<'a>(v: &'a Value, name: &str, path: &str) -> Result<&'a Value> {
    v.get(name)
        .ok_or_else(|| Error::NluParse(format!("missing field `{path}{name}`")))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::NluParse(format!("field `{path}` is not a number")))
}

/// Parses a response of the shape
/// `{"categories": [{"label", "score"}], "sentiment": {"document": {"label", "score"}}}`.
///
/// Category scores are kept verbatim. The sentiment value takes its sign from
/// the label (`positive` → +, `negative` → −, `neutral` → 0) and its
/// magnitude from the score.
pub fn parse_nlu_response(payload: &[u8]) -> Result<(Vec<DomainAssignment>, SentimentScore)> {
    let root: Value = serde_json::from_slice(payload)
        .map_err(|e| Error::NluParse(format!("invalid JSON: {e}")))?;
    let cats = field(&root, "categories", "")?
        .as_array()
        .ok_or_else(|| Error::NluParse("field `categories` is not an array".into()))?;
    let mut categories = Vec::with_capacity(cats.len());
    for (i, c) in cats.iter().enumerate() {
        let path = format!("categories[{i}].");
        let label = field(c, "label", &path)?
            .as_str()
            .ok_or_else(|| Error::NluParse(format!("field `{path}label` is not a string")))?;
        let score = number(field(c, "score", &path)?, &format!("{path}score"))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::NluParse(format!(
                "score out of range: `{path}score` = {score}"
            )));
        }
        let category = normalize_category(label);
        if category.is_empty() {
            return Err(Error::NluParse(format!("field `{path}label` is empty")));
        }
        categories.push(DomainAssignment { category, score });
    }

    let doc = field(field(&root, "sentiment", "")?, "document", "sentiment.")?;
    let label = field(doc, "label", "sentiment.document.")?
        .as_str()
        .ok_or_else(|| {
            Error::NluParse("field `sentiment.document.label` is not a string".into())
        })?;
    let score = number(
        field(doc, "score", "sentiment.document.")?,
        "sentiment.document.score",
    )?;
    if !(-1.0..=1.0).contains(&score) {
        return Err(Error::NluParse(format!(
            "score out of range: `sentiment.document.score` = {score}"
        )));
    }
    let value = match label.to_ascii_lowercase().as_str() {
        "positive" => score.abs(),
        "negative" => -score.abs(),
        "neutral" => 0.0,
        other => {
            return Err(Error::NluParse(format!(
                "unknown sentiment label `{other}`"
            )))
        }
    };
    Ok((categories, SentimentScore::clamped(value)))
}

/// Hex SHA-256 of the request text; the cache key.
pub fn cache_key(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NluMode {
    /// Replay responses from the cache only; misses yield empty analyses.
    Cached,
    /// Query the endpoint on cache misses and store the responses.
    Live,
}

pub struct NluClient {
    mode: NluMode,
    endpoint: Option<String>,
    api_key: Option<String>,
    cache_dir: PathBuf,
    agent: ureq::Agent,
    misses: AtomicUsize,
    failures: AtomicUsize,
}

impl NluClient {
    pub fn new(
        mode: NluMode,
        endpoint: Option<String>,
        api_key: Option<String>,
        cache_dir: impl Into<PathBuf>,
        timeout: Duration,
    ) -> Result<Self> {
        if mode == NluMode::Live && endpoint.is_none() {
            return Err(Error::Argument(format!(
                "live NLU mode needs an endpoint (set {ENDPOINT_ENV})"
            )));
        }
        let cache_dir = cache_dir.into();
        std::fs::create_dir_all(&cache_dir).map_err(|e| Error::io(&cache_dir, e))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Ok(Self {
            mode,
            endpoint,
            api_key,
            cache_dir,
            agent,
            misses: AtomicUsize::new(0),
            failures: AtomicUsize::new(0),
        })
    }

    /// Client configured from `NLU_ENDPOINT` / `NLU_API_KEY`.
    pub fn from_env(mode: NluMode, cache_dir: impl Into<PathBuf>) -> Result<Self> {
        Self::new(
            mode,
            std::env::var(ENDPOINT_ENV).ok(),
            std::env::var(API_KEY_ENV).ok(),
            cache_dir,
            Duration::from_secs(30),
        )
    }

    pub fn cache_path(&self, text: &str) -> PathBuf {
        self.cache_dir.join(format!("{}.json", cache_key(text)))
    }

    /// Cache misses in `Cached` mode so far.
    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Failed live requests so far.
    pub fn failures(&self) -> usize {
        self.failures.load(Ordering::Relaxed)
    }

    fn read_cache(&self, path: &Path) -> Option<NluAnalysis> {
        let bytes = std::fs::read(path).ok()?;
        match parse_nlu_response(&bytes) {
            Ok((categories, sentiment)) => Some(NluAnalysis {
                categories,
                sentiment,
            }),
            Err(e) => {
                log::warn!("ignoring corrupt NLU cache entry {}: {e}", path.display());
                None
            }
        }
    }

    fn request(&self, text: &str) -> Result<Vec<u8>> {
        let endpoint = self.endpoint.as_deref().unwrap_or_default();
        let body = serde_json::json!({ "text": text }).to_string();
        let mut req = self
            .agent
            .post(endpoint)
            .header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send(body.as_bytes())
            .map_err(|e| Error::Format(format!("NLU request failed: {e}")))?;
        resp.body_mut()
            .read_to_vec()
            .map_err(|e| Error::Format(format!("NLU response unreadable: {e}")))
    }

    /// Analysis of `text`; never fails. Misses and service errors are logged
    /// and counted, and produce an empty analysis.
    pub fn analyze(&self, text: &str) -> NluAnalysis {
        let path = self.cache_path(text);
        if let Some(hit) = self.read_cache(&path) {
            return hit;
        }
        match self.mode {
            NluMode::Cached => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                NluAnalysis::empty()
            }
            NluMode::Live => {
                let outcome = self.request(text).and_then(|bytes| {
                    let (categories, sentiment) = parse_nlu_response(&bytes)?;
                    if let Err(e) = std::fs::write(&path, &bytes) {
                        log::warn!("cannot write NLU cache {}: {e}", path.display());
                    }
                    Ok(NluAnalysis {
                        categories,
                        sentiment,
                    })
                });
                outcome.unwrap_or_else(|e| {
                    self.failures.fetch_add(1, Ordering::Relaxed);
                    log::warn!("{e}");
                    NluAnalysis::empty()
                })
            }
        }
    }
}
