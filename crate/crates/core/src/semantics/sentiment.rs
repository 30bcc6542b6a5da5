use std::collections::HashMap;
use std::path::Path;

use super::tokenize::tokenize;
use super::SentimentScore;
use crate::error::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/sentiment_lexicon.tsv");

/// Term polarities in `[-1, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentimentLexicon {
    terms: HashMap<String, f64>,
}

impl SentimentLexicon {
    pub fn new(entries: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut terms = HashMap::new();
        for (term, value) in entries {
            if !(-1.0..=1.0).contains(&value) {
                return Err(Error::Argument(format!(
                    "lexicon value {value} for `{term}` outside [-1, 1]"
                )));
            }
            terms.insert(term.to_lowercase(), value);
        }
        Ok(Self { terms })
    }

    /// Parses `term<TAB>value` lines; `#` lines are comments.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, value) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("lexicon line {}: expected term<TAB>value", i + 1))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "lexicon line {}: bad value `{}`",
                    i + 1,
                    value.trim()
                ))
            })?;
            entries.push((term.trim().to_string(), value));
        }
        Self::new(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_tsv(&text)
    }

    /// The lexicon bundled with the crate.
    pub fn bundled() -> Self {
        Self::parse_tsv(DEFAULT_LEXICON).expect("bundled lexicon is well-formed")
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.terms.get(term).copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms with the given sign, sorted.
    pub fn terms_with_sign(&self, positive: bool) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .terms
            .iter()
            .filter(|(_, &v)| if positive { v > 0.0 } else { v < 0.0 })
            .map(|(t, _)| t.as_str())
            .collect();
        out.sort_unstable();
        out
    }
}

/// Mean lexicon value of the matched tokens; 0 when nothing matches.
pub fn sentiment(text: &str, lexicon: &SentimentLexicon) -> SentimentScore {
    let (sum, n) = tokenize(text)
        .iter()
        .filter_map(|t| lexicon.get(t))
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return SentimentScore::NEUTRAL;
    }
    SentimentScore::clamped(sum / n as f64)
}
