use rayon::prelude::*;

use super::TrainConfig;
use crate::error::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `theta` holds one weight per feature followed by the bias.
fn linear(theta: &[f64], x: &[f64]) -> f64 {
    let (w, b) = theta.split_at(theta.len() - 1);
    w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b[0]
}

fn check_shapes(theta: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "{} rows but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::Argument("logistic regression needs examples".into()));
    }
    for x in xs {
        if x.len() + 1 != theta.len() {
            return Err(Error::DimensionMismatch {
                expected: theta.len() - 1,
                got: x.len(),
            });
        }
    }
    Ok(())
}

/// Mean cross-entropy plus `l2 / 2 * |w|^2` (the bias is not penalized).
pub fn logistic_loss(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> Result<f64> {
    check_shapes(theta, xs, ys)?;
    Ok(loss_unchecked(theta, xs, ys, l2))
}

fn loss_unchecked(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> f64 {
    let n = xs.len() as f64;
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let z = linear(theta, x);
            softplus(z) - y * z
        })
        .sum::<f64>()
        / n;
    let w = &theta[..theta.len() - 1];
    data + 0.5 * l2 * w.iter().map(|w| w * w).sum::<f64>()
}

/// Analytic gradient of [`logistic_loss`] with respect to `theta`.
pub fn logistic_gradient(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> Result<Vec<f64>> {
    check_shapes(theta, xs, ys)?;
    Ok(gradient_unchecked(theta, xs, ys, l2))
}

fn gradient_unchecked(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> Vec<f64> {
    let d = theta.len() - 1;
    let n = xs.len() as f64;
    let mut g = vec![0.0; d + 1];
    for (x, &y) in xs.iter().zip(ys) {
        let r = sigmoid(linear(theta, x)) - y;
        for (gj, xj) in g.iter_mut().zip(x) {
            *gj += r * xj;
        }
        g[d] += r;
    }
    for gj in &mut g {
        *gj /= n;
    }
    for j in 0..d {
        g[j] += l2 * theta[j];
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub theta: Vec<f64>,
    /// Loss at the starting point and after every epoch.
    pub losses: Vec<f64>,
}

impl LogisticFit {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

/// Rows per parallel chunk. Partial sums are combined in chunk order, so the
/// result does not depend on the number of worker threads.
const CHUNK: usize = 4096;

/// Loss and gradient at `theta` in one pass over the data.
fn loss_and_gradient(theta: &[f64], xs: &[Vec<f64>], ys: &[f64], l2: f64) -> (f64, Vec<f64>) {
    let d = theta.len() - 1;
    let partials: Vec<(f64, Vec<f64>)> = xs
        .par_chunks(CHUNK)
        .zip(ys.par_chunks(CHUNK))
        .map(|(xc, yc)| {
            let mut loss = 0.0;
            let mut g = vec![0.0; d + 1];
            for (x, &y) in xc.iter().zip(yc) {
                let z = linear(theta, x);
                let e = (-z.abs()).exp();
                loss += z.max(0.0) + e.ln_1p() - y * z;
                let p = if z >= 0.0 {
                    1.0 / (1.0 + e)
                } else {
                    e / (1.0 + e)
                };
                let r = p - y;
                for (gj, xj) in g.iter_mut().zip(x) {
                    *gj += r * xj;
                }
                g[d] += r;
            }
            (loss, g)
        })
        .collect();
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut g = vec![0.0; d + 1];
    for (l, pg) in partials {
        loss += l;
        for (a, b) in g.iter_mut().zip(pg) {
            *a += b;
        }
    }
    let w = &theta[..d];
    loss = loss / n + 0.5 * l2 * w.iter().map(|w| w * w).sum::<f64>();
    for gj in &mut g {
        *gj /= n;
    }
    for j in 0..d {
        g[j] += l2 * theta[j];
    }
    (loss, g)
}

/// Full-batch gradient descent from zero weights.
pub fn fit_logistic(xs: &[Vec<f64>], ys: &[f64], config: &TrainConfig) -> Result<LogisticFit> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Argument(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.l2 < 0.0 {
        return Err(Error::Argument(format!(
            "l2 must be non-negative, got {}",
            config.l2
        )));
    }
    let d = xs.first().map_or(0, Vec::len);
    let mut theta = vec![0.0; d + 1];
    check_shapes(&theta, xs, ys)?;
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..=config.epochs {
        let (loss, g) = loss_and_gradient(&theta, xs, ys, config.l2);
        if !loss.is_finite() || theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged {
                lr: config.learning_rate,
                epoch,
            });
        }
        losses.push(loss);
        if epoch == config.epochs {
            break;
        }
        for (t, g) in theta.iter_mut().zip(&g) {
            *t -= config.learning_rate * g;
        }
    }
    Ok(LogisticFit { theta, losses })
}

pub fn logistic_probability(theta: &[f64], x: &[f64]) -> f64 {
    sigmoid(linear(theta, x))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn cfg(lr: f64, epochs: usize, l2: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            epochs,
            l2,
            seed: 0,
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!((softplus(-1000.0)).abs() < 1e-300);
        assert_eq!(softplus(1000.0), 1000.0);
    }

    #[test]
    fn separable_fixture_is_learned() {
        // Two clusters separated along x0 + x1 with margin >= 1 in the
        // normalized square.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..60 {
            let pos = i % 2 == 0;
            let base = if pos { 0.75 } else { 0.05 };
            xs.push(vec![
                base + rng.random::<f64>() * 0.2,
                base + rng.random::<f64>() * 0.2,
            ]);
            ys.push(if pos { 1.0 } else { 0.0 });
        }
        let fit = fit_logistic(&xs, &ys, &cfg(0.5, 2000, 1e-4)).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| (logistic_probability(&fit.theta, x) >= 0.5) == (y == 1.0))
            .count();
        assert_eq!(correct, xs.len());
    }

    #[test]
    fn identical_features_give_half() {
        let xs = vec![vec![0.5, 0.5]; 10];
        let ys: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        let fit = fit_logistic(&xs, &ys, &cfg(0.5, 500, 1e-2)).unwrap();
        assert!((logistic_probability(&fit.theta, &xs[0]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn loss_never_increases_at_small_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..5).map(|_| rng.random()).collect())
            .collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                if x[0] + 0.3 * rng.random::<f64>() > 0.6 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let fit = fit_logistic(&xs, &ys, &cfg(0.1, 500, 1e-3)).unwrap();
        for pair in fit.losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-15, "{} -> {}", pair[0], pair[1]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..4).map(|_| rng.random()).collect())
            .collect();
        let ys: Vec<f64> = (0..30).map(|_| rng.random_range(0..2) as f64).collect();
        let theta: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = logistic_gradient(&theta, &xs, &ys, 0.1).unwrap();
        let h = 1e-5;
        for j in 0..theta.len() {
            let mut up = theta.clone();
            let mut down = theta.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (logistic_loss(&up, &xs, &ys, 0.1).unwrap()
                - logistic_loss(&down, &xs, &ys, 0.1).unwrap())
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-6 * fd.abs().max(g[j].abs()).max(1e-3));
        }
    }

    #[test]
    fn fused_pass_matches_separate_ones() {
        let xs: Vec<Vec<f64>> = (0..10_000)
            .map(|i| vec![(i % 7) as f64 / 7.0, (i % 13) as f64 / 13.0])
            .collect();
        let ys: Vec<f64> = (0..10_000).map(|i| (i % 3 == 0) as u8 as f64).collect();
        let theta = [0.3, -1.2, 0.1];
        let (loss, g) = loss_and_gradient(&theta, &xs, &ys, 0.01);
        assert!((loss - logistic_loss(&theta, &xs, &ys, 0.01).unwrap()).abs() < 1e-12);
        for (a, b) in g
            .iter()
            .zip(logistic_gradient(&theta, &xs, &ys, 0.01).unwrap())
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn divergence_names_the_rate() {
        let xs = vec![vec![1.0], vec![0.0]];
        let ys = vec![1.0, 0.0];
        let err = fit_logistic(&xs, &ys, &cfg(1e300, 5, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Diverged { lr, .. } if lr == 1e300));
        assert!(err.to_string().contains("learning rate"));
    }
}
