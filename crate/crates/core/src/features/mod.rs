//! Per-user, per-domain, per-window credibility features.
//!
//! A [`FeatureVector`] always carries the fifteen values named in
//! [`FEATURE_NAMES`], in that order. The order is part of
//! [`SCHEMA_VERSION`] and is shared by the CSV and JSON outputs.

mod assemble;
mod formulas;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub use assemble::{
    assemble_vectors, compute_features, observed_domains, user_features, UserFeatures,
};
pub use formulas::{
    account_age_years, domain_frequency, domain_user_score, domain_weight, engagement_counts,
    follower_friend_ratio, inverse_domain_frequency, relevant_domains, reply_sentiment, score_for,
    sum_scores, tweet_similarity_penalty, url_similarity_penalty, Penalty,
};

use crate::error::{Error, Result};
use crate::numfmt::format_csv_float;

pub const SCHEMA_VERSION: u32 = 1;
pub const FEATURE_DIM: usize = 15;
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "W", "Sc", "R", "L", "P", "S", "SP", "SN", "FOL", "FRD", "FF_R", "Twt_Sim", "URL_Sim", "DF",
    "IDF",
];
/// Relevance threshold for domain frequency and engagement attribution.
pub const DEFAULT_TAU: f64 = 0.5;

const ID_COLUMNS: [&str; 4] = ["schema_version", "window", "domain", "user_id"];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

/// Features of a user that do not depend on the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGlobalFeatures {
    pub window: String,
    pub user_id: String,
    pub twt_sim: f64,
    pub twt_sim_defined: bool,
    pub url_sim: f64,
    pub url_sim_defined: bool,
    pub fol: u64,
    pub frd: u64,
    pub ff_r: f64,
    pub df: usize,
    pub idf: f64,
    pub age_years: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDomainFeatures {
    pub user_id: String,
    pub domain: String,
    pub window: String,
    pub sum_cnt_scr: f64,
    pub sum_url_scr: f64,
    pub sc: f64,
    pub w: f64,
    pub r: u64,
    pub l: u64,
    pub p: u64,
    pub sp: f64,
    /// Magnitude of the negative reply mass.
    pub sn: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub window: String,
    pub domain: String,
    pub user_id: String,
    pub values: [f64; FEATURE_DIM],
}

impl FeatureVector {
    pub fn from_parts(g: &UserGlobalFeatures, c: &UserDomainFeatures) -> Self {
        FeatureVector {
            window: c.window.clone(),
            domain: c.domain.clone(),
            user_id: c.user_id.clone(),
            values: [
                c.w,
                c.sc,
                c.r as f64,
                c.l as f64,
                c.p as f64,
                c.s,
                c.sp,
                c.sn,
                g.fol as f64,
                g.frd as f64,
                g.ff_r,
                g.twt_sim,
                g.url_sim,
                g.df as f64,
                g.idf,
            ],
        }
    }

    /// Builds a vector from a value slice, checking its length.
    pub fn from_values(window: &str, domain: &str, user_id: &str, values: &[f64]) -> Result<Self> {
        let values: [f64; FEATURE_DIM] =
            values.try_into().map_err(|_| Error::DimensionMismatch {
                expected: FEATURE_DIM,
                got: values.len(),
            })?;
        Ok(FeatureVector {
            window: window.to_string(),
            domain: domain.to_string(),
            user_id: user_id.to_string(),
            values,
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn w(&self) -> f64 {
        self.values[0]
    }
}

pub fn csv_header() -> Vec<&'static str> {
    ID_COLUMNS
        .iter()
        .chain(FEATURE_NAMES.iter())
        .copied()
        .collect()
}

/// CSV with a fixed header; floats at twelve significant digits.
pub fn write_features_csv<W: Write>(vectors: &[FeatureVector], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    let version = SCHEMA_VERSION.to_string();
    for v in vectors {
        let mut row: Vec<String> = vec![
            version.clone(),
            v.window.clone(),
            v.domain.clone(),
            v.user_id.clone(),
        ];
        row.extend(v.values.iter().map(|&x| format_csv_float(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<features csv>", e))?;
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected = csv_header();
    if header.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            got: header.len().saturating_sub(ID_COLUMNS.len()),
        });
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected features header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let version: u32 = rec[0]
            .parse()
            .map_err(|_| Error::Format(format!("features line {line}: bad schema_version")))?;
        if version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "features line {line}: schema version {version}, expected {SCHEMA_VERSION}"
            )));
        }
        let values = rec
            .iter()
            .skip(ID_COLUMNS.len())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("features line {line}: bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(FeatureVector::from_values(
            &rec[1], &rec[2], &rec[3], &values,
        )?);
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct FeaturesDoc {
    schema_version: u32,
    feature_names: Vec<String>,
    vectors: Vec<VectorRepr>,
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    window: String,
    domain: String,
    user_id: String,
    values: Vec<f64>,
}

/// JSON with full round-trip precision.
pub fn write_features_json<W: Write>(vectors: &[FeatureVector], out: W) -> Result<()> {
    let doc = FeaturesDoc {
        schema_version: SCHEMA_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        vectors: vectors
            .iter()
            .map(|v| VectorRepr {
                window: v.window.clone(),
                domain: v.domain.clone(),
                user_id: v.user_id.clone(),
                values: v.values.to_vec(),
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc)?;
    Ok(())
}

pub fn read_features_json<R: Read>(input: R) -> Result<Vec<FeatureVector>> {
    let doc: FeaturesDoc = serde_json::from_reader(input)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "features schema version {}, expected {SCHEMA_VERSION}",
            doc.schema_version
        )));
    }
    if doc.feature_names.iter().ne(FEATURE_NAMES.iter()) {
        return Err(Error::DimensionMismatch {
            expected: FEATURE_DIM,
            got: doc.feature_names.len(),
        });
    }
    doc.vectors
        .iter()
        .map(|v| FeatureVector::from_values(&v.window, &v.domain, &v.user_id, &v.values))
        .collect()
}
