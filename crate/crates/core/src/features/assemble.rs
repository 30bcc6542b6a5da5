use std::collections::BTreeSet;
use std::sync::LazyLock;

use rayon::prelude::*;

use super::formulas::*;
use super::{FeatureVector, UserDomainFeatures, UserGlobalFeatures};
use crate::error::Result;
use crate::ingest::{Dataset, TimeWindow, UserProfile};
use crate::semantics::{Annotations, DomainAssignment, PostAnnotation};

static EMPTY: LazyLock<PostAnnotation> = LazyLock::new(PostAnnotation::default);

fn annotation<'a>(ann: &'a Annotations, post_id: &str) -> &'a PostAnnotation {
    ann.posts.get(post_id).unwrap_or(&EMPTY)
}

/// Distinct domains reached by a text assignment `>= tau` anywhere in `d`;
/// its size is the `n` of `IDF_u`.
pub fn observed_domains(d: &Dataset, ann: &Annotations, tau: f64) -> BTreeSet<String> {
    relevant_domains(
        d.posts().map(|p| annotation(ann, &p.id).text.as_slice()),
        tau,
    )
    .into_iter()
    .map(str::to_string)
    .collect()
}

/// All features of one user inside one window.
#[derive(Debug, Clone, PartialEq)]
pub struct UserFeatures {
    pub global: UserGlobalFeatures,
    /// Only the cells that qualify for a feature vector, by domain.
    pub domains: Vec<UserDomainFeatures>,
}

pub fn user_features(
    user: &UserProfile,
    window: &TimeWindow,
    ann: &Annotations,
    n_domains: usize,
    tau: f64,
) -> Result<UserFeatures> {
    let posts: Vec<_> = user
        .posts
        .iter()
        .map(|p| (p, annotation(ann, &p.id)))
        .collect();
    let text_assignments = || posts.iter().map(|(_, a)| a.text.as_slice());
    let url_assignments = || {
        posts
            .iter()
            .flat_map(|(p, a)| a.urls.iter().take(p.urls.len()).map(Vec::as_slice))
    };

    let twt = tweet_similarity_penalty(posts.iter().map(|(p, _)| p.text.as_str()));
    let url = url_similarity_penalty(
        posts
            .iter()
            .flat_map(|(p, _)| p.urls.iter().map(String::as_str)),
    );
    let df = domain_frequency(text_assignments(), tau);
    let idf = inverse_domain_frequency(n_domains, df)?;
    let age_years = account_age_years(user.account_created_at, window.end);
    let global = UserGlobalFeatures {
        window: window.label.clone(),
        user_id: user.user_id.clone(),
        twt_sim: twt.value,
        twt_sim_defined: twt.defined,
        url_sim: url.value,
        url_sim_defined: url.defined,
        fol: user.followers_count,
        frd: user.friends_count,
        ff_r: follower_friend_ratio(user.followers_count, user.friends_count, age_years),
        df,
        idf,
        age_years,
    };

    let candidates: BTreeSet<&str> = text_assignments()
        .chain(url_assignments())
        .flatten()
        .map(|a: &DomainAssignment| a.category.as_str())
        .collect();

    let mut domains = Vec::new();
    for domain in candidates {
        let (sum_cnt_scr, sum_url_scr) = sum_scores(text_assignments(), url_assignments(), domain);
        let sc = domain_user_score(twt.value, sum_cnt_scr, url.value, sum_url_scr);
        let w = domain_weight(sc, idf);
        let attributed: Vec<_> = posts
            .iter()
            .filter(|(_, a)| score_for(&a.text, domain) >= tau)
            .map(|(p, _)| *p)
            .collect();
        let (r, l, p) = engagement_counts(attributed.iter().copied());
        let (sp, sn, s) = reply_sentiment(
            attributed
                .iter()
                .flat_map(|post| post.reply_ids.iter())
                .map(|id| ann.replies.get(id).copied().unwrap_or(0.0)),
        );
        if w > 0.0 || r != 0 || l != 0 || p != 0 || s != 0.0 {
            domains.push(UserDomainFeatures {
                user_id: user.user_id.clone(),
                domain: domain.to_string(),
                window: window.label.clone(),
                sum_cnt_scr,
                sum_url_scr,
                sc,
                w,
                r,
                l,
                p,
                sp,
                sn,
                s,
            });
        }
    }
    Ok(UserFeatures { global, domains })
}

/// Feature vectors of one window snapshot, ordered by domain then user id.
pub fn assemble_vectors(
    window: &TimeWindow,
    d: &Dataset,
    ann: &Annotations,
    n_domains: usize,
    tau: f64,
) -> Result<Vec<FeatureVector>> {
    let per_user: Vec<UserFeatures> = d
        .users
        .par_iter()
        .map(|u| user_features(u, window, ann, n_domains, tau))
        .collect::<Result<_>>()?;
    let mut vectors: Vec<FeatureVector> = per_user
        .iter()
        .flat_map(|f| {
            f.domains
                .iter()
                .map(|cell| FeatureVector::from_parts(&f.global, cell))
        })
        .collect();
    vectors.sort_by(|a, b| (&a.domain, &a.user_id).cmp(&(&b.domain, &b.user_id)));
    Ok(vectors)
}

/// Vectors for every window, in window order; `n` is taken over all windows.
pub fn compute_features(
    windows: &[(TimeWindow, Dataset)],
    ann: &Annotations,
    tau: f64,
) -> Result<(usize, Vec<FeatureVector>)> {
    let mut observed = BTreeSet::new();
    for (_, d) in windows {
        observed.extend(observed_domains(d, ann, tau));
    }
    let n = observed.len();
    let mut out = Vec::new();
    for (w, d) in windows {
        out.extend(assemble_vectors(w, d, ann, n, tau)?);
    }
    Ok((n, out))
}
