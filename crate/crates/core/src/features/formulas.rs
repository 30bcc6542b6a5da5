use std::collections::{BTreeSet, HashSet};

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::ingest::{registrable_host, Post};
use crate::semantics::{tokenize, DomainAssignment};

const DAYS_PER_YEAR: f64 = 365.25;

/// A duplication penalty; `defined` is false when there was nothing to
/// measure and `value` holds the neutral 1.0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalty {
    pub value: f64,
    pub defined: bool,
}

impl Penalty {
    const UNDEFINED: Penalty = Penalty {
        value: 1.0,
        defined: false,
    };
}

/// Distinct over total token count across `texts`.
pub fn tweet_similarity_penalty<'a>(texts: impl IntoIterator<Item = &'a str>) -> Penalty {
    let mut distinct = HashSet::new();
    let mut total = 0usize;
    for text in texts {
        for token in tokenize(text) {
            total += 1;
            distinct.insert(token);
        }
    }
    if total == 0 {
        return Penalty::UNDEFINED;
    }
    Penalty {
        value: distinct.len() as f64 / total as f64,
        defined: true,
    }
}

/// `0.5 * (distinct URLs + distinct registrable hosts) / URLs`.
pub fn url_similarity_penalty<'a>(urls: impl IntoIterator<Item = &'a str>) -> Penalty {
    let mut distinct = HashSet::new();
    let mut hosts = HashSet::new();
    let mut total = 0usize;
    for url in urls {
        let url = url.trim();
        total += 1;
        distinct.insert(url);
        hosts.insert(registrable_host(url));
    }
    if total == 0 {
        return Penalty::UNDEFINED;
    }
    Penalty {
        value: 0.5 * (distinct.len() + hosts.len()) as f64 / total as f64,
        defined: true,
    }
}

/// Score of `domain` in an assignment list, 0 when absent.
pub fn score_for(assignments: &[DomainAssignment], domain: &str) -> f64 {
    assignments
        .iter()
        .find(|a| a.category == domain)
        .map_or(0.0, |a| a.score)
}

/// `(Sum_cnt_scr, Sum_url_scr)`: the scores of `domain` summed over post
/// texts and, separately, over fetched URL pages.
pub fn sum_scores<'a>(
    text_assignments: impl IntoIterator<Item = &'a [DomainAssignment]>,
    url_assignments: impl IntoIterator<Item = &'a [DomainAssignment]>,
    domain: &str,
) -> (f64, f64) {
    let cnt = text_assignments
        .into_iter()
        .map(|a| score_for(a, domain))
        .sum();
    let url = url_assignments
        .into_iter()
        .map(|a| score_for(a, domain))
        .sum();
    (cnt, url)
}

pub fn domain_user_score(twt_sim: f64, sum_cnt_scr: f64, url_sim: f64, sum_url_scr: f64) -> f64 {
    twt_sim * sum_cnt_scr + url_sim * sum_url_scr
}

/// Domains reached by at least one assignment scoring `>= tau`.
pub fn relevant_domains<'a>(
    assignments: impl IntoIterator<Item = &'a [DomainAssignment]>,
    tau: f64,
) -> BTreeSet<&'a str> {
    assignments
        .into_iter()
        .flatten()
        .filter(|a| a.score >= tau)
        .map(|a| a.category.as_str())
        .collect()
}

pub fn domain_frequency<'a>(
    assignments: impl IntoIterator<Item = &'a [DomainAssignment]>,
    tau: f64,
) -> usize {
    relevant_domains(assignments, tau).len()
}

/// `ln(n / DF)`, and 0 for a user without any domain of interest.
pub fn inverse_domain_frequency(n: usize, df: usize) -> Result<f64> {
    if df > n {
        return Err(Error::Internal(format!(
            "domain frequency {df} exceeds the {n} observed domains"
        )));
    }
    if df == 0 {
        return Ok(0.0);
    }
    Ok((n as f64 / df as f64).ln())
}

pub fn domain_weight(sc: f64, idf: f64) -> f64 {
    sc * idf
}

/// `(R, L, P)` summed over the given posts.
pub fn engagement_counts<'a>(posts: impl IntoIterator<Item = &'a Post>) -> (u64, u64, u64) {
    posts.into_iter().fold((0, 0, 0), |(r, l, p), post| {
        (
            r + post.retweet_count,
            l + post.like_count,
            p + post.reply_ids.len() as u64,
        )
    })
}

/// `(SP, SN, S)` with SN as a non-negative magnitude.
pub fn reply_sentiment(values: impl IntoIterator<Item = f64>) -> (f64, f64, f64) {
    let (sp, sn) = values.into_iter().fold((0.0, 0.0), |(sp, sn), v| {
        if v > 0.0 {
            (sp + v, sn)
        } else {
            (sp, sn - v)
        }
    });
    (sp, sn, sp - sn)
}

/// Account age in years at `at`, clamped below at one day.
pub fn account_age_years(created: DateTime<Utc>, at: DateTime<Utc>) -> f64 {
    let days = (at - created).num_milliseconds() as f64 / 86_400_000.0;
    (days / DAYS_PER_YEAR).max(1.0 / DAYS_PER_YEAR)
}

pub fn follower_friend_ratio(fol: u64, frd: u64, age_years: f64) -> f64 {
    let age = age_years.max(1.0 / DAYS_PER_YEAR);
    if fol == frd {
        1.0 / age
    } else {
        (fol as f64 - frd as f64) / age
    }
}
