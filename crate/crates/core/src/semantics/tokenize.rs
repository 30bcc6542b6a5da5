use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

const STOPWORDS_TEXT: &str = include_str!("../../data/stopwords.txt");

static STOPWORDS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| STOPWORDS_TEXT.split_whitespace().collect());

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").expect("valid regex"));

static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("valid regex"));

pub fn is_stopword(term: &str) -> bool {
    STOPWORDS.contains(term)
}

/// Lowercased content terms of a short text.
///
/// URLs and `@mentions` are removed, hashtags keep their word, the rest is
/// split on non-alphanumeric characters. Single-character terms and
/// stopwords are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut cleaned = std::borrow::Cow::Borrowed(text);
    if text.contains("://") || text.contains("www.") || text.contains("WWW.") {
        cleaned = std::borrow::Cow::Owned(URL_RE.replace_all(&cleaned, " ").into_owned());
    }
    if cleaned.contains('@') {
        cleaned = std::borrow::Cow::Owned(MENTION_RE.replace_all(&cleaned, " ").into_owned());
    }
    cleaned
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .collect()
}
