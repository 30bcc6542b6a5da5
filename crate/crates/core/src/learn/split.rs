use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Label, LabeledExample};
use crate::error::{Error, Result};

/// Seeded stratified split. Each class contributes the floor of its share
/// to the test set; the remainder up to `round(n * test_fraction)` goes to
/// the classes with the largest fractional parts. Both outputs keep input
/// order.
pub fn split(
    examples: &[LabeledExample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let classes: Vec<Vec<usize>> = [Label::Influencer, Label::NonInfluencer]
        .iter()
        .map(|&label| {
            examples
                .iter()
                .enumerate()
                .filter(|(_, e)| e.label == label)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    if classes.iter().any(Vec::is_empty) {
        return Err(Error::Argument(
            "split needs at least one example of each class".into(),
        ));
    }

    let target = (examples.len() as f64 * test_fraction).round() as usize;
    let shares: Vec<f64> = classes
        .iter()
        .map(|c| c.len() as f64 * test_fraction)
        .collect();
    let mut take: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let mut by_remainder: Vec<usize> = (0..classes.len()).collect();
    by_remainder.sort_by(|&a, &b| {
        let fa = shares[a] - shares[a].floor();
        let fb = shares[b] - shares[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(take.iter().sum());
    for &c in by_remainder.iter().cycle().take(2 * classes.len()) {
        if missing == 0 {
            break;
        }
        if take[c] < classes[c].len() {
            take[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_test = vec![false; examples.len()];
    for (class, &k) in classes.iter().zip(&take) {
        let mut idx = class.clone();
        idx.shuffle(&mut rng);
        for &i in &idx[..k] {
            in_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = examples.iter().zip(&in_test).partition(|(_, &t)| t);
    Ok((
        train.into_iter().map(|(e, _)| e.clone()).collect(),
        test.into_iter().map(|(e, _)| e.clone()).collect(),
    ))
}
