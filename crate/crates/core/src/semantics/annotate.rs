use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonical_url, fetch_url_text, Annotator, DomainAssignment, UrlTextSource};
use crate::error::{Error, Result};
use crate::ingest::Dataset;

/// Domain assignments of one post: its text, and the page behind each of its
/// URLs (aligned with `Post::urls`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PostAnnotation {
    pub text: Vec<DomainAssignment>,
    pub urls: Vec<Vec<DomainAssignment>>,
}

/// Semantic outputs for a whole dataset: post assignments and reply
/// sentiment values, keyed by record id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub posts: HashMap<String, PostAnnotation>,
    pub replies: HashMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum AnnotationLine {
    Post {
        id: String,
        text: Vec<DomainAssignment>,
        urls: Vec<Vec<DomainAssignment>>,
    },
    Reply {
        id: String,
        sentiment: f64,
    },
}

impl Annotations {
    /// Multiplies every domain score by `c`; sentiment is untouched.
    pub fn scale_scores(&mut self, c: f64) {
        for ann in self.posts.values_mut() {
            for a in ann.text.iter_mut().chain(ann.urls.iter_mut().flatten()) {
                a.score *= c;
            }
        }
    }

    /// JSONL, posts then replies, each sorted by id.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let posts: BTreeMap<_, _> = self.posts.iter().collect();
        for (id, ann) in posts {
            let line = AnnotationLine::Post {
                id: id.clone(),
                text: ann.text.clone(),
                urls: ann.urls.clone(),
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<annotations>", e))?;
        }
        let replies: BTreeMap<_, _> = self.replies.iter().collect();
        for (id, &sentiment) in replies {
            let line = AnnotationLine::Reply {
                id: id.clone(),
                sentiment,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")
                .map_err(|e| Error::io("<annotations>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut out = Annotations::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<annotations>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: AnnotationLine = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("annotations line {}: {e}", i + 1)))?;
            match parsed {
                AnnotationLine::Post { id, text, urls } => {
                    out.posts.insert(id, PostAnnotation { text, urls });
                }
                AnnotationLine::Reply { id, sentiment } => {
                    out.replies.insert(id, sentiment);
                }
            }
        }
        Ok(out)
    }
}

/// Runs the annotator over every post text, every distinct URL page and
/// every reply. Work is spread over the current rayon pool; the result does
/// not depend on the number of threads.
pub fn annotate_dataset(
    d: &Dataset,
    annotator: &dyn Annotator,
    urls: &UrlTextSource,
) -> Annotations {
    let mut distinct_urls: Vec<&str> = d
        .posts()
        .flat_map(|p| p.urls.iter().map(|u| canonical_url(u)))
        .collect();
    distinct_urls.sort_unstable();
    distinct_urls.dedup();
    let url_assignments: HashMap<&str, Vec<DomainAssignment>> = distinct_urls
        .par_iter()
        .map(|&u| {
            let text = fetch_url_text(u, urls);
            let assigned = if text.is_empty() {
                Vec::new()
            } else {
                annotator.domains(&text)
            };
            (u, assigned)
        })
        .collect();

    let posts: Vec<_> = d.posts().collect();
    let post_annotations: HashMap<String, PostAnnotation> = posts
        .par_iter()
        .map(|p| {
            let ann = PostAnnotation {
                text: annotator.domains(&p.text),
                urls: p
                    .urls
                    .iter()
                    .map(|u| url_assignments[canonical_url(u)].clone())
                    .collect(),
            };
            (p.id.clone(), ann)
        })
        .collect();

    let replies: HashMap<String, f64> = d
        .replies
        .par_iter()
        .map(|r| (r.id.clone(), annotator.sentiment(&r.text).value()))
        .collect();

    Annotations {
        posts: post_annotations,
        replies,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::SentimentScore;

    #[test]
    fn jsonl_round_trip() {
        let mut a = Annotations::default();
        a.posts.insert(
            "p1".into(),
            PostAnnotation {
                text: vec![DomainAssignment {
                    category: "/sports".into(),
                    score: 0.694,
                }],
                urls: vec![
                    vec![],
                    vec![DomainAssignment {
                        category: "/science".into(),
                        score: 0.1 + 0.2,
                    }],
                ],
            },
        );
        a.replies.insert("r1".into(), -0.3);
        let mut buf = Vec::new();
        a.write_jsonl(&mut buf).unwrap();
        let back = Annotations::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, a);
    }

    struct Fixed;
    impl Annotator for Fixed {
        fn domains(&self, text: &str) -> Vec<DomainAssignment> {
            vec![DomainAssignment {
                category: format!("/{}", text.len()),
                score: 0.5,
            }]
        }
        fn sentiment(&self, _: &str) -> SentimentScore {
            SentimentScore::clamped(0.25)
        }
    }

    #[test]
    fn urls_without_text_get_no_assignments() {
        let text = r#"{"record_type":"user","id":"u","followers_count":1,"friends_count":1,"account_created_at":"2015-01-01T00:00:00Z"}
{"record_type":"post","id":"p","user_id":"u","text":"abc","urls":["https://a.com/x?q=1","https://b.com/"],"created_at":"2017-01-01T00:00:00Z"}
{"record_type":"reply","id":"r","parent_post_id":"p","text":"hi","created_at":"2017-01-01T00:00:00Z"}"#;
        let d = crate::ingest::read_dataset(text.as_bytes(), "t").unwrap();
        let map = crate::semantics::UrlTextMap::new([(
            "https://a.com/x".to_string(),
            "page text".to_string(),
        )]);
        let a = annotate_dataset(&d, &Fixed, &UrlTextSource::Offline(map));
        let p = &a.posts["p"];
        assert_eq!(p.text[0].category, "/3");
        assert_eq!(p.urls[0][0].category, "/9");
        assert!(p.urls[1].is_empty());
        assert_eq!(a.replies["r"], 0.25);
    }
}
