//! Brute-force feature computation used as a test oracle.
//!
//! Everything is recomputed from the raw records with plain loops: month
//! buckets, per-user token and URL counts, per-domain sums. Only text
//! tokenization and host extraction come from the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, TimeZone, Utc};
use domaincred::features::FEATURE_NAMES;
use domaincred::ingest::{registrable_host, Dataset, Post, UserProfile};
use domaincred::semantics::{tokenize, Annotations};

pub type Cell = (String, String, String);
type MonthBuckets<'a> = BTreeMap<(i32, u32), Vec<(&'a UserProfile, Vec<&'a Post>)>>;

fn month(t: chrono::DateTime<Utc>) -> (i32, u32) {
    (t.year(), t.month())
}

fn window_end((y, m): (i32, u32)) -> chrono::DateTime<Utc> {
    let (y, m) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
    Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0).unwrap()
}

fn text_score(ann: &Annotations, post: &str, domain: &str) -> f64 {
    let mut s = 0.0;
    if let Some(a) = ann.posts.get(post) {
        for x in &a.text {
            if x.category == domain {
                s = x.score;
            }
        }
    }
    s
}

fn url_score(ann: &Annotations, post: &Post, domain: &str) -> f64 {
    let mut total = 0.0;
    if let Some(a) = ann.posts.get(&post.id) {
        for i in 0..post.urls.len().min(a.urls.len()) {
            for x in &a.urls[i] {
                if x.category == domain {
                    total += x.score;
                }
            }
        }
    }
    total
}

fn user_df(ann: &Annotations, posts: &[&Post], tau: f64) -> usize {
    let mut seen = BTreeSet::new();
    for p in posts {
        if let Some(a) = ann.posts.get(&p.id) {
            for x in &a.text {
                if x.score >= tau {
                    seen.insert(x.category.clone());
                }
            }
        }
    }
    seen.len()
}

/// Feature values keyed by `(window, domain, user_id)`.
pub fn oracle_vectors(d: &Dataset, ann: &Annotations, tau: f64) -> BTreeMap<Cell, Vec<f64>> {
    let mut months: MonthBuckets = BTreeMap::new();
    for u in &d.users {
        let mut by_month: BTreeMap<(i32, u32), Vec<&Post>> = BTreeMap::new();
        for p in &u.posts {
            by_month.entry(month(p.created_at)).or_default().push(p);
        }
        for (m, posts) in by_month {
            months.entry(m).or_default().push((u, posts));
        }
    }

    let mut all = BTreeSet::new();
    for users in months.values() {
        for (_, posts) in users {
            for p in posts {
                if let Some(a) = ann.posts.get(&p.id) {
                    for x in &a.text {
                        if x.score >= tau {
                            all.insert(x.category.clone());
                        }
                    }
                }
            }
        }
    }
    let n = all.len() as f64;

    let mut out = BTreeMap::new();
    for (m, users) in &months {
        let label = format!("{:04}-{:02}", m.0, m.1);
        let end = window_end(*m);
        for (u, posts) in users {
            let mut tokens = Vec::new();
            for p in posts {
                tokens.extend(tokenize(&p.text));
            }
            let distinct: BTreeSet<&String> = tokens.iter().collect();
            let twt = if tokens.is_empty() {
                1.0
            } else {
                distinct.len() as f64 / tokens.len() as f64
            };

            let mut urls = Vec::new();
            for p in posts {
                for url in &p.urls {
                    urls.push(url.trim().to_string());
                }
            }
            let distinct_urls: BTreeSet<&String> = urls.iter().collect();
            let hosts: BTreeSet<String> = urls.iter().map(|u| registrable_host(u)).collect();
            let url_sim = if urls.is_empty() {
                1.0
            } else {
                (distinct_urls.len() + hosts.len()) as f64 / (2.0 * urls.len() as f64)
            };

            let df = user_df(ann, posts, tau);
            let idf = if df == 0 { 0.0 } else { (n / df as f64).ln() };

            let days = (end - u.account_created_at).num_seconds() as f64 / 86400.0;
            let age = f64::max(days / 365.25, 1.0 / 365.25);
            let fol = u.followers_count as f64;
            let frd = u.friends_count as f64;
            let ff_r = if fol == frd {
                1.0 / age
            } else {
                (fol - frd) / age
            };

            let mut candidates = BTreeSet::new();
            for p in posts {
                if let Some(a) = ann.posts.get(&p.id) {
                    for x in &a.text {
                        candidates.insert(x.category.clone());
                    }
                    for list in a.urls.iter().take(p.urls.len()) {
                        for x in list {
                            candidates.insert(x.category.clone());
                        }
                    }
                }
            }

            for domain in candidates {
                let mut cnt = 0.0;
                let mut url = 0.0;
                let (mut r, mut l, mut pc) = (0.0, 0.0, 0.0);
                let (mut sp, mut sn) = (0.0, 0.0);
                for p in posts {
                    let ts = text_score(ann, &p.id, &domain);
                    cnt += ts;
                    url += url_score(ann, p, &domain);
                    if ts >= tau {
                        r += p.retweet_count as f64;
                        l += p.like_count as f64;
                        pc += p.reply_ids.len() as f64;
                        for rid in &p.reply_ids {
                            let v = ann.replies.get(rid).copied().unwrap_or(0.0);
                            if v > 0.0 {
                                sp += v;
                            } else if v < 0.0 {
                                sn += -v;
                            }
                        }
                    }
                }
                let sc = twt * cnt + url_sim * url;
                let w = sc * idf;
                let s = sp - sn;
                if w > 0.0 || r != 0.0 || l != 0.0 || pc != 0.0 || s != 0.0 {
                    let values = vec![
                        w, sc, r, l, pc, s, sp, sn, fol, frd, ff_r, twt, url_sim, df as f64, idf,
                    ];
                    assert_eq!(values.len(), FEATURE_NAMES.len());
                    out.insert((label.clone(), domain.clone(), u.user_id.clone()), values);
                }
            }
        }
    }
    out
}

/// Largest relative difference over all cells, with `1` as the scale floor;
/// panics when the two key sets differ.
pub fn max_relative_error(
    expected: &BTreeMap<Cell, Vec<f64>>,
    actual: &BTreeMap<Cell, Vec<f64>>,
) -> f64 {
    let ek: Vec<&Cell> = expected.keys().collect();
    let ak: Vec<&Cell> = actual.keys().collect();
    assert_eq!(ek.len(), ak.len(), "different number of vectors");
    assert!(ek == ak, "different (window, domain, user) cells");
    let mut worst = 0.0f64;
    for (k, e) in expected {
        let a = &actual[k];
        for (i, (x, y)) in e.iter().zip(a).enumerate() {
            let err = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
            if err > worst || err.is_nan() {
                worst = err;
                if err > 1e-6 {
                    eprintln!("{k:?} {}: expected {x}, got {y}", FEATURE_NAMES[i]);
                }
            }
        }
    }
    worst
}
