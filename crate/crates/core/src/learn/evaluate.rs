use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{LabeledExample, Model, ModelKind};
use crate::error::{Error, Result};
use crate::numfmt::format_csv_float;

pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub test_size: usize,
    pub accuracy: f64,
    pub classification_error: f64,
    pub confusion: Confusion,
    /// `(fpr, tpr)` from `(0, 0)` to `(1, 1)`.
    pub roc_points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC over the distinct score values taken as thresholds (`score >=
/// threshold` is positive), from the strictest down. Without both classes
/// the curve is the chance diagonal.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let p = labels.iter().filter(|&&l| l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return vec![(0.0, 0.0), (1.0, 1.0)];
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    points
}

/// Trapezoidal area under a ROC polyline.
pub fn auc_trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub fn evaluate(model: &Model, test: &[LabeledExample]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Argument(
            "cannot evaluate on an empty test set".into(),
        ));
    }
    let scores = test
        .iter()
        .map(|e| model.predict(&e.vector.values))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<bool> = test.iter().map(|e| e.label.is_positive()).collect();
    Ok(report_from_scores(model.kind(), &scores, &labels))
}

pub fn report_from_scores(kind: ModelKind, scores: &[f64], labels: &[bool]) -> EvalReport {
    let mut c = Confusion::default();
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= DECISION_THRESHOLD, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    let accuracy = (c.tp + c.tn) as f64 / c.total() as f64;
    let roc_points = roc_curve(scores, labels);
    let auc = auc_trapezoid(&roc_points);
    EvalReport {
        model: kind,
        test_size: c.total(),
        accuracy,
        classification_error: 1.0 - accuracy,
        confusion: c,
        roc_points,
        auc,
    }
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_roc_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["fpr", "tpr"])?;
        for &(x, y) in &self.roc_points {
            w.write_record([format_csv_float(x), format_csv_float(y)])?;
        }
        w.flush().map_err(|e| Error::io("<roc csv>", e))?;
        Ok(())
    }
}
