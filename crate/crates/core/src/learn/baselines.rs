use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-9;

/// Per-class Gaussian parameters for every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub prior_positive: f64,
    pub mean: [Vec<f64>; 2],
    pub variance: [Vec<f64>; 2],
}

fn class_counts(ys: &[f64]) -> (usize, usize) {
    let pos = ys.iter().filter(|&&y| y == 1.0).count();
    (pos, ys.len() - pos)
}

fn require_both_classes(ys: &[f64]) -> Result<(usize, usize)> {
    let (pos, neg) = class_counts(ys);
    if pos == 0 || neg == 0 {
        return Err(Error::Argument(
            "training data must contain both classes".into(),
        ));
    }
    Ok((pos, neg))
}

/// Index 0 of `mean`/`variance` is the negative class, 1 the positive.
pub fn fit_naive_bayes(xs: &[Vec<f64>], ys: &[f64]) -> Result<GaussianNb> {
    let (pos, neg) = require_both_classes(ys)?;
    let d = xs[0].len();
    let counts = [neg as f64, pos as f64];
    let mut mean = [vec![0.0; d], vec![0.0; d]];
    for (x, &y) in xs.iter().zip(ys) {
        let c = (y == 1.0) as usize;
        for (m, v) in mean[c].iter_mut().zip(x) {
            *m += v;
        }
    }
    for c in 0..2 {
        mean[c].iter_mut().for_each(|m| *m /= counts[c]);
    }
    let mut variance = [vec![0.0; d], vec![0.0; d]];
    for (x, &y) in xs.iter().zip(ys) {
        let c = (y == 1.0) as usize;
        for j in 0..d {
            let e = x[j] - mean[c][j];
            variance[c][j] += e * e;
        }
    }
    for c in 0..2 {
        variance[c]
            .iter_mut()
            .for_each(|v| *v = (*v / counts[c]).max(VARIANCE_FLOOR));
    }
    Ok(GaussianNb {
        prior_positive: pos as f64 / ys.len() as f64,
        mean,
        variance,
    })
}

impl GaussianNb {
    fn log_joint(&self, c: usize, x: &[f64]) -> f64 {
        let prior = if c == 1 {
            self.prior_positive
        } else {
            1.0 - self.prior_positive
        };
        let mut lp = prior.ln();
        for ((&v, &m), &s2) in x.iter().zip(&self.mean[c]).zip(&self.variance[c]) {
            lp -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (v - m) * (v - m) / s2);
        }
        lp
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let l0 = self.log_joint(0, x);
        let l1 = self.log_joint(1, x);
        super::logistic::sigmoid(l1 - l0)
    }
}

/// One-feature threshold rule: `x[feature] > threshold` selects the
/// "above" side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature: usize,
    pub threshold: f64,
    pub p_above: f64,
    pub p_below: f64,
}

impl DecisionStump {
    pub fn probability(&self, x: &[f64]) -> f64 {
        if x[self.feature] > self.threshold {
            self.p_above
        } else {
            self.p_below
        }
    }
}

/// Best single-feature threshold by training accuracy. Candidate thresholds
/// are `f64::MIN` (everything above) and midpoints between consecutive
/// distinct values; ties go to the lowest feature, then the lowest
/// threshold.
#[allow(clippy::needless_range_loop)]
pub fn fit_stump(xs: &[Vec<f64>], ys: &[f64]) -> Result<DecisionStump> {
    let (pos_total, _) = require_both_classes(ys)?;
    let n = ys.len();
    let prior = pos_total as f64 / n as f64;
    let d = xs[0].len();
    let side_correct = |pos: usize, all: usize| pos.max(all - pos);
    let side_p = |pos: usize, all: usize| {
        if all == 0 {
            prior
        } else {
            pos as f64 / all as f64
        }
    };

    let mut best: Option<(usize, DecisionStump)> = None;
    let mut order: Vec<usize> = (0..n).collect();
    for j in 0..d {
        order.sort_by(|&a, &b| xs[a][j].total_cmp(&xs[b][j]).then(a.cmp(&b)));
        let mut consider = |threshold: f64, pos_below: usize, below: usize| {
            let above = n - below;
            let pos_above = pos_total - pos_below;
            let correct = side_correct(pos_below, below) + side_correct(pos_above, above);
            if best.as_ref().is_none_or(|(c, _)| correct > *c) {
                best = Some((
                    correct,
                    DecisionStump {
                        feature: j,
                        threshold,
                        p_above: side_p(pos_above, above),
                        p_below: side_p(pos_below, below),
                    },
                ));
            }
        };
        consider(f64::MIN, 0, 0);
        let mut pos_below = 0;
        for k in 0..n {
            let i = order[k];
            pos_below += (ys[i] == 1.0) as usize;
            let v = xs[i][j];
            if k + 1 < n {
                let next = xs[order[k + 1]][j];
                if next > v {
                    consider(v + (next - v) / 2.0, pos_below, k + 1);
                }
            }
        }
    }
    Ok(best.expect("at least one candidate").1)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn stump_picks_the_separating_feature() {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i % 2 == 0 { 0.8 } else { 0.2 }, (i % 3) as f64 / 3.0])
            .collect();
        let ys: Vec<f64> = (0..20).map(|i| ((i % 2) == 0) as u8 as f64).collect();
        let s = fit_stump(&xs, &ys).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert_eq!((s.p_above, s.p_below), (1.0, 0.0));
        assert_eq!(s.probability(&[0.9, 0.0]), 1.0);
    }

    #[test]
    fn stump_never_below_majority_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(2..40);
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(0..4) as f64, rng.random()])
                .collect();
            let mut ys: Vec<f64> = (0..n).map(|_| rng.random_range(0..2) as f64).collect();
            ys[0] = 1.0;
            ys[1] = 0.0;
            let s = fit_stump(&xs, &ys).unwrap();
            let acc = xs
                .iter()
                .zip(&ys)
                .filter(|(x, &y)| (s.probability(x) >= 0.5) == (y == 1.0))
                .count() as f64
                / n as f64;
            let pos = ys.iter().sum::<f64>() / n as f64;
            assert!(acc >= pos.max(1.0 - pos) - 1e-12);
            // brute force over all observed values as thresholds
            for j in 0..2 {
                for t in xs.iter().map(|x| x[j]) {
                    let brute = xs.iter().zip(&ys).map(|(x, &y)| (x[j] > t, y == 1.0)).fold(
                        [[0usize; 2]; 2],
                        |mut m, (a, y)| {
                            m[a as usize][y as usize] += 1;
                            m
                        },
                    );
                    let correct: usize = brute.iter().map(|s| s[0].max(s[1])).sum();
                    assert!(acc * n as f64 >= correct as f64 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn equal_class_conditionals_give_prior() {
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 5) as f64 / 4.0]).collect();
        let ys: Vec<f64> = (0..40).map(|i| if i < 15 { 1.0 } else { 0.0 }).collect();
        let nb = fit_naive_bayes(&xs, &ys).unwrap();
        let prior = nb.prior_positive;
        assert_eq!(prior, 0.375);
        for x in &xs {
            assert!((nb.probability(x) - prior).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_features_hit_the_variance_floor() {
        let xs = vec![vec![0.5], vec![0.5], vec![0.5]];
        let ys = vec![1.0, 0.0, 0.0];
        let nb = fit_naive_bayes(&xs, &ys).unwrap();
        assert_eq!(nb.variance[0][0], VARIANCE_FLOOR);
        assert!(nb.probability(&[0.5]).is_finite());
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(fit_stump(&[vec![1.0]], &[1.0]).is_err());
        assert!(fit_naive_bayes(&[vec![1.0]], &[0.0]).is_err());
    }
}
