//! Bundled vocabulary pools and the miniature category corpus built from them.
//!
//! Each taxonomy category owns a disjoint word list whose first
//! [`CORE_WORDS`] entries dominate both the training corpus and generated
//! posts; a shared filler pool stands in for topic-free chatter.

use std::path::Path;
use std::sync::LazyLock;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const VOCAB_TSV: &str = include_str!("../data/vocab.tsv");
const FILLER_TXT: &str = include_str!("../data/filler.txt");

/// Number of leading words of each pool that carry most of its mass.
pub const CORE_WORDS: usize = 6;

pub const CORPUS_DOCS_PER_CATEGORY: usize = 12;
const CORPUS_SEED: u64 = 0x20_4e_65_77_73;
const CORPUS_DOC_WORDS: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainVocabulary {
    pub category: String,
    pub words: Vec<String>,
}

impl DomainVocabulary {
    pub fn core(&self) -> &[String] {
        &self.words[..CORE_WORDS.min(self.words.len())]
    }

    pub fn peripheral(&self) -> &[String] {
        &self.words[CORE_WORDS.min(self.words.len())..]
    }

    /// Directory-safe name without spaces or slashes.
    pub fn slug(&self) -> String {
        self.category
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect()
    }
}

static VOCABULARIES: LazyLock<Vec<DomainVocabulary>> = LazyLock::new(|| {
    VOCAB_TSV
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (cat, words) = l.split_once('\t').expect("vocab.tsv: category<TAB>words");
            DomainVocabulary {
                category: cat.to_string(),
                words: words.split_whitespace().map(str::to_string).collect(),
            }
        })
        .collect()
});

static FILLER: LazyLock<Vec<String>> = LazyLock::new(|| {
    FILLER_TXT
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(str::to_string)
        .collect()
});

/// All bundled category pools, in file order (20 categories).
pub fn domain_vocabularies() -> &'static [DomainVocabulary] {
    &VOCABULARIES
}

pub fn filler_words() -> &'static [String] {
    &FILLER
}

pub(crate) fn draw_filler<R: Rng>(rng: &mut R) -> &'static str {
    filler_words().choose(rng).expect("non-empty filler pool")
}

/// The miniature newsgroups-style training corpus as `(text, category)`
/// pairs, generated deterministically from the pools.
pub fn fixture_corpus() -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut docs = Vec::new();
    for v in domain_vocabularies() {
        for _ in 0..CORPUS_DOCS_PER_CATEGORY {
            let words: Vec<&str> = (0..CORPUS_DOC_WORDS)
                .map(|_| {
                    let roll: f64 = rng.random();
                    if roll < 0.6 {
                        v.core().choose(&mut rng).expect("core").as_str()
                    } else if roll < 0.85 {
                        v.peripheral()
                            .choose(&mut rng)
                            .expect("peripheral")
                            .as_str()
                    } else {
                        draw_filler(&mut rng)
                    }
                })
                .collect();
            docs.push((words.join(" "), v.category.clone()));
        }
    }
    docs
}

/// Writes `docs` in the corpus directory layout read by
/// [`crate::semantics::load_corpus_dir`].
pub fn write_corpus_dir(docs: &[(String, String)], root: &Path) -> Result<()> {
    let mut counters: std::collections::BTreeMap<&str, usize> = Default::default();
    for (text, category) in docs {
        let rel = category.trim_start_matches('/');
        if rel.is_empty() {
            return Err(Error::Argument("document without category".into()));
        }
        let dir = root.join(rel);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let n = counters.entry(category).or_insert(0);
        *n += 1;
        let path = dir.join(format!("{:04}.txt", n));
        std::fs::write(&path, format!("{text}\n")).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::semantics::{is_stopword, tokenize};

    #[test]
    fn twenty_disjoint_pools() {
        let v = domain_vocabularies();
        assert_eq!(v.len(), 20);
        let mut seen = HashSet::new();
        for pool in v {
            assert_eq!(pool.words.len(), 24, "{}", pool.category);
            for w in &pool.words {
                assert!(seen.insert(w.as_str()), "duplicate word {w}");
                assert!(!is_stopword(w));
                assert_eq!(tokenize(w), [w.as_str()], "{w} must survive tokenisation");
            }
        }
        for f in filler_words() {
            assert!(!seen.contains(f.as_str()), "filler {f} overlaps a pool");
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(fixture_corpus(), fixture_corpus());
        assert_eq!(fixture_corpus().len(), 20 * CORPUS_DOCS_PER_CATEGORY);
    }
}
