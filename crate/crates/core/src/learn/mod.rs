//! Influencer classifiers over feature vectors and their evaluation.
//!
//! Every model stores the min-max [`Normalization`] fitted on its training
//! split, so [`Model::predict`] takes raw feature values.

mod baselines;
mod evaluate;
mod logistic;
mod normalize;
mod split;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baselines::{fit_naive_bayes, fit_stump, DecisionStump, GaussianNb, VARIANCE_FLOOR};
pub use evaluate::{
    auc_trapezoid, evaluate, report_from_scores, roc_curve, Confusion, EvalReport,
    DECISION_THRESHOLD,
};
pub use logistic::{
    fit_logistic, logistic_gradient, logistic_loss, logistic_probability, sigmoid, LogisticFit,
};
pub use normalize::{normalize_apply, normalize_fit, Normalization};
pub use split::split;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, FEATURE_NAMES};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Influencer,
    NonInfluencer,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Influencer
    }

    pub fn target(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Influencer => "influencer",
            Label::NonInfluencer => "non_influencer",
        }
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "influencer" => Ok(Label::Influencer),
            "non_influencer" => Ok(Label::NonInfluencer),
            other => Err(Error::Format(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub vector: FeatureVector,
    pub label: Label,
}

/// `(user_id, domain) -> label`.
pub type LabelMap = HashMap<(String, String), Label>;

/// Reads a `user_id,domain,label` CSV.
pub fn read_labels<R: Read>(input: R) -> Result<LabelMap> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(["user_id", "domain", "label"]) {
        return Err(Error::Format(
            "labels header must be user_id,domain,label".into(),
        ));
    }
    let mut out = LabelMap::new();
    for rec in r.records() {
        let rec = rec?;
        let label: Label = rec[2].parse()?;
        out.insert((rec[0].to_string(), rec[1].trim().to_lowercase()), label);
    }
    Ok(out)
}

/// Rows are written sorted by user id, then domain.
pub fn write_labels<W: Write>(labels: &LabelMap, out: W) -> Result<()> {
    let mut rows: Vec<_> = labels.iter().collect();
    rows.sort();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "domain", "label"])?;
    for ((user, domain), label) in rows {
        w.write_record([user.as_str(), domain.as_str(), label.as_str()])?;
    }
    w.flush().map_err(|e| Error::io("<labels csv>", e))?;
    Ok(())
}

/// Pairs vectors with their labels; vectors without one are skipped.
pub fn label_vectors(vectors: &[FeatureVector], labels: &LabelMap) -> Vec<LabeledExample> {
    let out: Vec<LabeledExample> = vectors
        .iter()
        .filter_map(|v| {
            labels
                .get(&(v.user_id.clone(), v.domain.clone()))
                .map(|&label| LabeledExample {
                    vector: v.clone(),
                    label,
                })
        })
        .collect();
    if out.len() < vectors.len() {
        log::info!(
            "{} of {} vectors have no label",
            vectors.len() - out.len(),
            vectors.len()
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 2000,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    NaiveBayes,
    DecisionStump,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Logistic,
        ModelKind::NaiveBayes,
        ModelKind::DecisionStump,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::NaiveBayes => "naive_bayes",
            ModelKind::DecisionStump => "decision_stump",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown model kind {s:?} (expected logistic, naive_bayes or decision_stump)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Parameters {
    /// One weight per feature followed by the bias.
    Logistic {
        weights: Vec<f64>,
        final_loss: f64,
    },
    NaiveBayes(GaussianNb),
    DecisionStump(DecisionStump),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    #[serde(flatten)]
    pub parameters: Parameters,
    pub normalization: Normalization,
    pub config: TrainConfig,
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self.parameters {
            Parameters::Logistic { .. } => ModelKind::Logistic,
            Parameters::NaiveBayes(_) => ModelKind::NaiveBayes,
            Parameters::DecisionStump(_) => ModelKind::DecisionStump,
        }
    }

    pub fn dim(&self) -> usize {
        self.normalization.dim()
    }

    /// Class-1 probability of a raw (unnormalized) feature vector.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        let x = self.normalization.apply(raw)?;
        Ok(self.predict_normalized(&x))
    }

    fn predict_normalized(&self, x: &[f64]) -> f64 {
        match &self.parameters {
            Parameters::Logistic { weights, .. } => logistic_probability(weights, x),
            Parameters::NaiveBayes(nb) => nb.probability(x),
            Parameters::DecisionStump(s) => s.probability(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "model format version {}, expected {MODEL_FORMAT_VERSION}",
                m.format_version
            )));
        }
        let d = m.dim();
        if m.normalization.max.len() != d || m.feature_names.len() != d {
            return Err(Error::Format(
                "model normalization and feature names disagree".into(),
            ));
        }
        if m.normalization
            .min
            .iter()
            .chain(&m.normalization.max)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Format(
                "model normalization ranges must be finite".into(),
            ));
        }
        let ok = match &m.parameters {
            Parameters::Logistic { weights, .. } => weights.len() == d + 1,
            Parameters::NaiveBayes(nb) => nb.mean.iter().chain(&nb.variance).all(|v| v.len() == d),
            Parameters::DecisionStump(s) => s.feature < d,
        };
        if !ok {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: match &m.parameters {
                    Parameters::Logistic { weights, .. } => weights.len().saturating_sub(1),
                    Parameters::NaiveBayes(nb) => nb.mean[0].len(),
                    Parameters::DecisionStump(s) => s.feature + 1,
                },
            });
        }
        Ok(m)
    }
}

fn prepare(train: &[LabeledExample]) -> Result<(Normalization, Vec<Vec<f64>>, Vec<f64>)> {
    let rows: Vec<&[f64]> = train.iter().map(|e| &e.vector.values[..]).collect();
    let norm = normalize_fit(&rows)?;
    let xs = rows
        .iter()
        .map(|r| norm.apply(r))
        .collect::<Result<Vec<_>>>()?;
    let ys = train.iter().map(|e| e.label.target()).collect();
    Ok((norm, xs, ys))
}

fn model(parameters: Parameters, normalization: Normalization, config: TrainConfig) -> Model {
    Model {
        format_version: MODEL_FORMAT_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        parameters,
        normalization,
        config,
    }
}

pub fn train_logistic(train: &[LabeledExample], config: &TrainConfig) -> Result<Model> {
    let (norm, xs, ys) = prepare(train)?;
    let fit = fit_logistic(&xs, &ys, config)?;
    let final_loss = fit.final_loss();
    Ok(model(
        Parameters::Logistic {
            weights: fit.theta,
            final_loss,
        },
        norm,
        *config,
    ))
}

pub fn train_baseline(
    train: &[LabeledExample],
    kind: ModelKind,
    config: &TrainConfig,
) -> Result<Model> {
    let (norm, xs, ys) = prepare(train)?;
    let parameters = match kind {
        ModelKind::NaiveBayes => Parameters::NaiveBayes(fit_naive_bayes(&xs, &ys)?),
        ModelKind::DecisionStump => Parameters::DecisionStump(fit_stump(&xs, &ys)?),
        ModelKind::Logistic => return train_logistic(train, config),
    };
    Ok(model(parameters, norm, *config))
}

pub fn train(train: &[LabeledExample], kind: ModelKind, config: &TrainConfig) -> Result<Model> {
    match kind {
        ModelKind::Logistic => train_logistic(train, config),
        other => train_baseline(train, other, config),
    }
}
