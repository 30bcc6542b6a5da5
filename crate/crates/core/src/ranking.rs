//! Per-domain, per-window user rankings and per-user W trajectories.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::learn::Model;
use crate::numfmt::format_csv_float;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankKey {
    W,
    ModelProbability,
}

impl FromStr for RankKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "W" | "w" => Ok(RankKey::W),
            "model_probability" | "probability" => Ok(RankKey::ModelProbability),
            other => Err(Error::Argument(format!(
                "unknown ranking key {other:?} (expected W or model_probability)"
            ))),
        }
    }
}

impl fmt::Display for RankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankKey::W => "W",
            RankKey::ModelProbability => "model_probability",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub user_id: String,
    pub key: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRanking {
    pub window: String,
    pub domain: String,
    pub entries: Vec<RankEntry>,
}

fn key_of(v: &FeatureVector, key: RankKey, model: Option<&Model>) -> Result<f64> {
    match key {
        RankKey::W => Ok(v.w()),
        RankKey::ModelProbability => {
            let model = model.ok_or_else(|| {
                Error::Argument("ranking by model_probability needs a trained model".into())
            })?;
            model.predict(&v.values)
        }
    }
}

/// Users with a vector in `(domain, window)`, by key descending then user id.
pub fn rank_domain(
    vectors: &[FeatureVector],
    domain: &str,
    window: &str,
    key: RankKey,
    model: Option<&Model>,
) -> Result<DomainRanking> {
    let mut keyed = vectors
        .iter()
        .filter(|v| v.domain == domain && v.window == window)
        .map(|v| Ok((key_of(v, key, model)?, v.user_id.as_str())))
        .collect::<Result<Vec<_>>>()?;
    if keyed.is_empty() {
        log::warn!("no vectors for domain {domain:?} in window {window:?}");
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(DomainRanking {
        window: window.to_string(),
        domain: domain.to_string(),
        entries: keyed
            .into_iter()
            .enumerate()
            .map(|(i, (key, user_id))| RankEntry {
                rank: i + 1,
                user_id: user_id.to_string(),
                key,
            })
            .collect(),
    })
}

/// Rankings of every `(window, domain)` cell present, in that order.
pub fn rank_all(
    vectors: &[FeatureVector],
    key: RankKey,
    model: Option<&Model>,
) -> Result<Vec<DomainRanking>> {
    let mut cells: BTreeMap<(&str, &str), Vec<FeatureVector>> = BTreeMap::new();
    for v in vectors {
        cells
            .entry((v.window.as_str(), v.domain.as_str()))
            .or_default()
            .push(v.clone());
    }
    cells
        .into_par_iter()
        .map(|((window, domain), vs)| rank_domain(&vs, domain, window, key, model))
        .collect()
}

/// `(window, W)` for each window where the user has a vector in `domain`.
pub fn temporal_series(
    vectors: &[FeatureVector],
    user_id: &str,
    domain: &str,
) -> Vec<(String, f64)> {
    let mut points: Vec<(String, f64)> = vectors
        .iter()
        .filter(|v| v.user_id == user_id && v.domain == domain)
        .map(|v| (v.window.clone(), v.w()))
        .collect();
    points.sort_by(|a, b| a.0.cmp(&b.0));
    points
}

pub fn write_rankings_csv<W: Write>(
    rankings: &[DomainRanking],
    key: RankKey,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window", "domain", "rank", "user_id", &key.to_string()])?;
    for r in rankings {
        for e in &r.entries {
            w.write_record([
                r.window.as_str(),
                r.domain.as_str(),
                &e.rank.to_string(),
                e.user_id.as_str(),
                &format_csv_float(e.key),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<rankings csv>", e))?;
    Ok(())
}

pub fn write_rankings_json<W: Write>(rankings: &[DomainRanking], out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, rankings)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_DIM;

    fn vector(window: &str, domain: &str, user: &str, w: f64) -> FeatureVector {
        let mut values = [0.0; FEATURE_DIM];
        values[0] = w;
        FeatureVector::from_values(window, domain, user, &values).unwrap()
    }

    fn order(r: &DomainRanking) -> Vec<&str> {
        r.entries.iter().map(|e| e.user_id.as_str()).collect()
    }

    #[test]
    fn single_user_ranks_first() {
        let vs = [vector("m", "/d", "x", 0.3)];
        let r = rank_domain(&vs, "/d", "m", RankKey::W, None).unwrap();
        assert_eq!(
            r.entries,
            [RankEntry {
                rank: 1,
                user_id: "x".into(),
                key: 0.3
            }]
        );
    }

    #[test]
    fn ties_break_by_user_id() {
        let vs = [
            vector("m", "/d", "b", 3.0),
            vector("m", "/d", "a", 3.0),
            vector("m", "/d", "c", 1.0),
        ];
        let r = rank_domain(&vs, "/d", "m", RankKey::W, None).unwrap();
        assert_eq!(order(&r), ["a", "b", "c"]);
        assert_eq!(
            r.entries.iter().map(|e| e.rank).collect::<Vec<_>>(),
            [1, 2, 3]
        );
    }

    #[test]
    fn scaling_keeps_order() {
        let vs: Vec<_> = (0..20)
            .map(|i| vector("m", "/d", &format!("u{i}"), ((i * 7) % 5) as f64 * 0.3))
            .collect();
        let scaled: Vec<_> = vs
            .iter()
            .map(|v| vector("m", "/d", &v.user_id, v.w() * 10.0))
            .collect();
        let a = rank_domain(&vs, "/d", "m", RankKey::W, None).unwrap();
        let b = rank_domain(&scaled, "/d", "m", RankKey::W, None).unwrap();
        assert_eq!(order(&a), order(&b));
    }

    #[test]
    fn unknown_cell_is_empty() {
        let vs = [vector("m", "/d", "x", 1.0)];
        assert!(rank_domain(&vs, "/other", "m", RankKey::W, None)
            .unwrap()
            .entries
            .is_empty());
    }

    #[test]
    fn probability_key_needs_model() {
        let vs = [vector("m", "/d", "x", 1.0)];
        assert!(rank_domain(&vs, "/d", "m", RankKey::ModelProbability, None).is_err());
    }

    #[test]
    fn temporal_series_is_chronological() {
        let vs = [
            vector("2017-03", "/d", "u", 2.0),
            vector("2017-01", "/d", "u", 1.0),
            vector("2017-02", "/e", "u", 9.0),
            vector("2017-02", "/d", "v", 9.0),
        ];
        assert_eq!(
            temporal_series(&vs, "u", "/d"),
            [("2017-01".to_string(), 1.0), ("2017-03".to_string(), 2.0)]
        );
        assert!(temporal_series(&vs, "nobody", "/d").is_empty());
    }

    #[test]
    fn rank_all_covers_every_cell() {
        let vs = [
            vector("2017-02", "/d", "u", 2.0),
            vector("2017-01", "/d", "u", 1.0),
            vector("2017-01", "/d", "v", 3.0),
        ];
        let all = rank_all(&vs, RankKey::W, None).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].window, "2017-01");
        assert_eq!(order(&all[0]), ["v", "u"]);
        let mut buf = Vec::new();
        write_rankings_csv(&all, RankKey::W, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "window,domain,rank,user_id,W\n2017-01,/d,1,v,3\n2017-01,/d,2,u,1\n2017-02,/d,1,u,2\n"
        );
    }
}
