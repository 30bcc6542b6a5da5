//! Domain (taxonomy) assignment and sentiment scoring of texts.
//!
//! The offline path is a TF-IDF centroid classifier plus a sentiment
//! lexicon. The NLU path replays or queries an external service whose
//! responses share the same shapes.

mod annotate;
mod fetch;
mod model;
mod nlu;
mod sentiment;
mod tokenize;

use serde::{Deserialize, Serialize};

pub use annotate::{annotate_dataset, Annotations, PostAnnotation};
pub use fetch::{canonical_url, fetch_url_text, html_to_text, UrlTextMap, UrlTextSource};
pub use model::{
    classify_terms, classify_text, load_corpus_dir, tf_idf_weight, train_category_model,
    CategoryModel, DEFAULT_TOP_K,
};
pub use nlu::{
    cache_key, parse_nlu_response, NluAnalysis, NluClient, NluMode, API_KEY_ENV, ENDPOINT_ENV,
};
pub use sentiment::{sentiment, SentimentLexicon};
pub use tokenize::{is_stopword, tokenize};

use crate::error::{Error, Result};

pub(crate) fn normalize_category(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// A taxonomy category with the confidence of assigning it to a text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainAssignment {
    pub category: String,
    pub score: f64,
}

impl DomainAssignment {
    pub fn new(category: &str, score: f64) -> Result<Self> {
        let category = normalize_category(category);
        if category.is_empty() {
            return Err(Error::Argument("empty category".into()));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Argument(format!(
                "assignment score {score} outside [0, 1]"
            )));
        }
        Ok(Self { category, score })
    }
}

/// Polarity and strength of a text, in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SentimentScore(f64);

impl SentimentScore {
    pub const NEUTRAL: SentimentScore = SentimentScore(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if (-1.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::Argument(format!(
                "sentiment {value} outside [-1, 1]"
            )))
        }
    }

    /// Clamps into range; NaN becomes neutral.
    pub fn clamped(value: f64) -> Self {
        if value.is_nan() {
            Self::NEUTRAL
        } else {
            Self(value.clamp(-1.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Source of domain assignments and sentiment for texts.
pub trait Annotator: Sync {
    fn domains(&self, text: &str) -> Vec<DomainAssignment>;
    fn sentiment(&self, text: &str) -> SentimentScore;
}

pub struct OfflineAnnotator {
    pub model: CategoryModel,
    pub lexicon: SentimentLexicon,
    pub top_k: usize,
}

impl Annotator for OfflineAnnotator {
    fn domains(&self, text: &str) -> Vec<DomainAssignment> {
        classify_text(text, &self.model, self.top_k)
    }

    fn sentiment(&self, text: &str) -> SentimentScore {
        sentiment(text, &self.lexicon)
    }
}

pub struct NluAnnotator {
    pub client: NluClient,
    pub top_k: usize,
}

impl Annotator for NluAnnotator {
    fn domains(&self, text: &str) -> Vec<DomainAssignment> {
        let mut cats = self.client.analyze(text).categories;
        cats.truncate(self.top_k);
        cats
    }

    fn sentiment(&self, text: &str) -> SentimentScore {
        self.client.analyze(text).sentiment
    }
}
