use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tokenize::tokenize;
use super::DomainAssignment;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 3;
const MODEL_FORMAT_VERSION: u32 = 1;

/// TF-IDF centroid classifier over a fixed taxonomy.
///
/// Each centroid is the unit-normalised sum of its category's training
/// document vectors. Classification scores are cosine similarities, so they
/// fall in `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct CategoryModel {
    categories: Vec<String>,
    centroids: Vec<BTreeMap<String, f64>>,
    vocabulary: BTreeMap<String, u64>,
    doc_count: u64,
    index: HashMap<String, TermEntry>,
}

#[derive(Debug, Clone, Default)]
struct TermEntry {
    idf: f64,
    postings: Vec<(usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    format_version: u32,
    doc_count: u64,
    categories: Vec<CategoryRepr>,
    vocabulary: BTreeMap<String, u64>,
}

#[derive(Serialize, Deserialize)]
struct CategoryRepr {
    path: String,
    centroid: BTreeMap<String, f64>,
}

impl From<CategoryModel> for ModelRepr {
    fn from(m: CategoryModel) -> Self {
        ModelRepr {
            format_version: MODEL_FORMAT_VERSION,
            doc_count: m.doc_count,
            categories: m
                .categories
                .into_iter()
                .zip(m.centroids)
                .map(|(path, centroid)| CategoryRepr { path, centroid })
                .collect(),
            vocabulary: m.vocabulary,
        }
    }
}

impl TryFrom<ModelRepr> for CategoryModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<Self> {
        if r.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported category model version {}",
                r.format_version
            )));
        }
        let (categories, centroids) = r
            .categories
            .into_iter()
            .map(|c| (c.path, c.centroid))
            .unzip();
        CategoryModel::from_parts(categories, centroids, r.vocabulary, r.doc_count)
    }
}

impl CategoryModel {
    fn from_parts(
        categories: Vec<String>,
        centroids: Vec<BTreeMap<String, f64>>,
        vocabulary: BTreeMap<String, u64>,
        doc_count: u64,
    ) -> Result<Self> {
        if doc_count == 0 {
            return Err(Error::Format("category model has no documents".into()));
        }
        if let Some((t, df)) = vocabulary.iter().find(|(_, &df)| df > doc_count) {
            return Err(Error::Format(format!(
                "term `{t}` has document frequency {df} > {doc_count}"
            )));
        }
        for (c, centroid) in categories.iter().zip(&centroids) {
            let norm = centroid.values().map(|w| w * w).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Format(format!("centroid of `{c}` has norm {norm}")));
            }
        }
        let mut model = CategoryModel {
            categories,
            centroids,
            vocabulary,
            doc_count,
            index: HashMap::new(),
        };
        model.build_index();
        Ok(model)
    }

    fn build_index(&mut self) {
        let mut index: HashMap<String, TermEntry> = HashMap::new();
        for (term, &df) in &self.vocabulary {
            index.insert(
                term.clone(),
                TermEntry {
                    idf: idf(self.doc_count, df),
                    postings: Vec::new(),
                },
            );
        }
        for (ci, centroid) in self.centroids.iter().enumerate() {
            for (term, &w) in centroid {
                index
                    .entry(term.clone())
                    .or_default()
                    .postings
                    .push((ci, w));
            }
        }
        self.index = index;
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn centroid(&self, category: &str) -> Option<&BTreeMap<String, f64>> {
        let i = self.categories.iter().position(|c| c == category)?;
        Some(&self.centroids[i])
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// Number of training documents containing `term` (0 if unseen).
    pub fn document_frequency(&self, term: &str) -> u64 {
        self.vocabulary.get(term).copied().unwrap_or(0)
    }

    /// `ln(N / df)`; unseen terms are treated as `df = N` and weigh nothing.
    pub fn idf(&self, term: &str) -> f64 {
        self.index.get(term).map_or(0.0, |e| e.idf)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn idf(doc_count: u64, df: u64) -> f64 {
    if df == 0 {
        0.0
    } else {
        (doc_count as f64 / df as f64).ln()
    }
}

/// `tf(term, doc) · ln(N / df(term))`.
pub fn tf_idf_weight(term: &str, doc_terms: &[String], model: &CategoryModel) -> f64 {
    let tf = doc_terms.iter().filter(|t| *t == term).count();
    if tf == 0 {
        return 0.0;
    }
    tf as f64 * model.idf(term)
}

fn term_counts<S: AsRef<str>>(terms: &[S]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in terms {
        *counts.entry(t.as_ref()).or_insert(0) += 1;
    }
    counts
}

/// Builds the centroid model from `(text, category)` pairs.
///
/// Documents are accumulated in a canonical order, so the model does not
/// depend on the order of `labeled_docs`. A category whose documents only
/// contain terms present in every training document has an all-zero TF-IDF
/// sum; its centroid falls back to normalised raw term counts.
pub fn train_category_model(labeled_docs: &[(String, String)]) -> Result<CategoryModel> {
    if labeled_docs.is_empty() {
        return Err(Error::Argument("empty training corpus".into()));
    }
    let mut by_category: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    let mut vocabulary: BTreeMap<String, u64> = BTreeMap::new();
    for (text, category) in labeled_docs {
        let category = super::normalize_category(category);
        if category.is_empty() {
            return Err(Error::Argument(
                "training document with empty category".into(),
            ));
        }
        let mut terms = tokenize(text);
        terms.sort_unstable();
        let mut distinct = terms.clone();
        distinct.dedup();
        for t in distinct {
            *vocabulary.entry(t).or_insert(0) += 1;
        }
        by_category.entry(category).or_default().push(terms);
    }
    let doc_count = labeled_docs.len() as u64;

    let mut categories = Vec::with_capacity(by_category.len());
    let mut centroids = Vec::with_capacity(by_category.len());
    for (category, mut docs) in by_category {
        docs.sort();
        let mut tfidf: BTreeMap<String, f64> = BTreeMap::new();
        let mut raw: BTreeMap<String, f64> = BTreeMap::new();
        for doc in &docs {
            for (term, tf) in term_counts(doc) {
                let w = tf as f64 * idf(doc_count, vocabulary[term]);
                *tfidf.entry(term.to_string()).or_insert(0.0) += w;
                *raw.entry(term.to_string()).or_insert(0.0) += tf as f64;
            }
        }
        tfidf.retain(|_, w| *w > 0.0);
        let mut centroid = if tfidf.is_empty() { raw } else { tfidf };
        let norm = centroid.values().map(|w| w * w).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Argument(format!(
                "category `{category}` has no usable terms"
            )));
        }
        centroid.values_mut().for_each(|w| *w /= norm);
        categories.push(category);
        centroids.push(centroid);
    }
    CategoryModel::from_parts(categories, centroids, vocabulary, doc_count)
}

/// Cosine-similarity classification of pre-tokenised text.
pub fn classify_terms<S: AsRef<str>>(
    terms: &[S],
    model: &CategoryModel,
    top_k: usize,
) -> Vec<DomainAssignment> {
    let counts = term_counts(terms);
    let mut dots = vec![0.0f64; model.categories.len()];
    let mut norm_sq = 0.0;
    for (term, tf) in counts {
        let Some(entry) = model.index.get(term) else {
            continue;
        };
        let w = tf as f64 * entry.idf;
        if w == 0.0 {
            continue;
        }
        norm_sq += w * w;
        for &(ci, cw) in &entry.postings {
            dots[ci] += w * cw;
        }
    }
    if norm_sq == 0.0 {
        return Vec::new();
    }
    let norm = norm_sq.sqrt();
    let mut out: Vec<DomainAssignment> = dots
        .into_iter()
        .enumerate()
        .filter(|&(_, d)| d > 0.0)
        .map(|(ci, d)| DomainAssignment {
            category: model.categories[ci].clone(),
            score: (d / norm).clamp(0.0, 1.0),
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.category.cmp(&b.category))
    });
    out.truncate(top_k);
    out
}

pub fn classify_text(text: &str, model: &CategoryModel, top_k: usize) -> Vec<DomainAssignment> {
    classify_terms(&tokenize(text), model, top_k)
}

/// Reads a newsgroups-style corpus: every directory holding files is a
/// category named by its path below `root` (`root/sports/football/*` →
/// `/sports/football`).
pub fn load_corpus_dir(root: &Path) -> Result<Vec<(String, String)>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(dir, e))?;
        entries.sort_by_key(|e| e.file_name());
        let rel = dir.strip_prefix(root).unwrap_or(dir);
        let category = format!(
            "/{}",
            rel.components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/")
        );
        for entry in entries {
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if path != *root {
                let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                out.push((
                    String::from_utf8_lossy(&bytes).into_owned(),
                    category.clone(),
                ));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.retain(|(_, c)| c != "/");
    if out.is_empty() {
        return Err(Error::Argument(format!(
            "corpus directory {} contains no category documents",
            root.display()
        )));
    }
    Ok(out)
}
