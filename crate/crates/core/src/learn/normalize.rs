use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-feature `(min, max)` ranges fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalization {
    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Maps into `[0, 1]`; constant features give 0.5 and values outside
    /// the fitted range are clamped.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.5
                }
            })
            .collect())
    }
}

pub fn normalize_fit(rows: &[&[f64]]) -> Result<Normalization> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Argument("cannot fit a normalization on no examples".into()))?;
    let d = first.len();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Argument(format!("non-finite value in feature {j}")));
            }
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    Ok(Normalization { min, max })
}

pub fn normalize_apply(n: &Normalization, x: &[f64]) -> Result<Vec<f64>> {
    n.apply(x)
}
