use std::collections::{BTreeMap, BTreeSet, HashMap};

use domaincred::features::{compute_features, feature_index, FeatureVector};
use domaincred::fixtures::fixture_corpus;
use domaincred::ingest::{
    cleanse, partition_windows, read_dataset, write_jsonl, CleanseConfig, Granularity,
};
use domaincred::semantics::{
    annotate_dataset, train_category_model, CategoryModel, OfflineAnnotator, SentimentLexicon,
    UrlTextSource,
};
use domaincred::synth::{generate, Role, SynthConfig, SynthOutput};

fn model() -> CategoryModel {
    train_category_model(&fixture_corpus()).unwrap()
}

fn features(out: &SynthOutput, model: &CategoryModel) -> Vec<FeatureVector> {
    let (clean, _) = cleanse(&out.dataset, &CleanseConfig::default());
    assert_eq!(
        clean.users.len(),
        out.dataset.users.len(),
        "cleansing must keep every synthetic user"
    );
    let annotator = OfflineAnnotator {
        model: model.clone(),
        lexicon: SentimentLexicon::bundled(),
        top_k: 3,
    };
    let ann = annotate_dataset(
        &clean,
        &annotator,
        &UrlTextSource::Offline(out.url_text_map()),
    );
    let windows = partition_windows(&clean, Granularity::Month, None, false).unwrap();
    compute_features(&windows, &ann, 0.5).unwrap().1
}

fn roles(out: &SynthOutput) -> HashMap<&str, (Role, &str)> {
    out.truth
        .iter()
        .map(|t| (t.user_id.as_str(), (t.role, t.home_domain.as_str())))
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-sided Mann-Whitney U test p-value (normal approximation with tie
/// correction).
fn mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&x| (x, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut rank_sum = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        rank_sum += avg * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let u = rank_sum - n1 * (n1 + 1.0) / 2.0;
    let nn = n as f64;
    let var = n1 * n2 / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    let z = (u - n1 * n2 / 2.0).abs() / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2)
}

/// Complementary error function (Numerical Recipes' Chebyshev fit,
/// relative error below 1.2e-7).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let r = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        r
    } else {
        2.0 - r
    }
}

#[test]
fn erfc_reference_values() {
    assert!((erfc(0.0) - 1.0).abs() < 1e-7);
    assert!((erfc(1.0) - 0.157_299_207).abs() < 1e-7);
    assert!((erfc(2.0) - 0.004_677_735).abs() < 1e-7);
    assert!((mann_whitney_p(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]) - 1.0).abs() < 1e-7);
}

#[test]
fn pure_influencers_stay_in_one_domain() {
    let m = model();
    for seed in 0..3 {
        let out = generate(&SynthConfig {
            n_users: 40,
            influencer_fraction: 1.0,
            spammer_fraction: 0.0,
            separation: 1.0,
            seed,
            ..Default::default()
        })
        .unwrap();
        let vs = features(&out, &m);
        let df = feature_index("DF").unwrap();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for v in &vs {
            assert_eq!(
                v.values[df], 1.0,
                "{} in {} has DF {}",
                v.user_id, v.window, v.values[df]
            );
            seen.insert(&v.user_id);
        }
        assert_eq!(seen.len(), 40);
    }
}

#[test]
fn no_separation_means_no_signal() {
    let m = model();
    let mut pos_all = Vec::new();
    let mut neg_all = Vec::new();
    let mut rejections = 0;
    for seed in 0..20 {
        let out = generate(&SynthConfig {
            n_users: 150,
            months: 2,
            separation: 0.0,
            seed,
            ..Default::default()
        })
        .unwrap();
        let roles = roles(&out);
        // Total home-domain W per user; other domains are negative for everyone.
        let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
        for v in features(&out, &m) {
            let (_, home) = roles[v.user_id.as_str()];
            if v.domain == home {
                *totals
                    .entry(roles.get_key_value(v.user_id.as_str()).unwrap().0)
                    .or_default() += v.w();
            }
        }
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for t in &out.truth {
            let w = totals.get(t.user_id.as_str()).copied().unwrap_or(0.0);
            if t.role == Role::Influencer {
                pos.push(w);
            } else {
                neg.push(w);
            }
        }
        if mann_whitney_p(&pos, &neg) < 0.01 {
            rejections += 1;
        }
        pos_all.extend(pos);
        neg_all.extend(neg);
    }
    let p = mann_whitney_p(&pos_all, &neg_all);
    assert!(p >= 0.01, "pooled p = {p}");
    assert!(rejections <= 1, "{rejections} of 20 seeds rejected");
}

#[test]
fn strong_separation_puts_influencers_above_spammers() {
    let m = model();
    for (i, seed) in (0..20).enumerate() {
        let separation = if i % 2 == 0 { 0.8 } else { 0.9 };
        let out = generate(&SynthConfig {
            n_users: 100,
            months: 2,
            separation,
            seed: 1000 + seed,
            ..Default::default()
        })
        .unwrap();
        let roles = roles(&out);
        let vs = features(&out, &m);
        let mut influencer_home = Vec::new();
        let mut spammer: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for v in &vs {
            match roles[v.user_id.as_str()] {
                (Role::Influencer, home) if home == v.domain => influencer_home.push(v.w()),
                (Role::Spammer, _) => spammer.entry(&v.domain).or_default().push(v.w()),
                _ => {}
            }
        }
        let inf = mean(&influencer_home);
        for (domain, ws) in &spammer {
            assert!(
                inf > mean(ws),
                "seed {seed}: influencers {inf} vs spammers {} in {domain}",
                mean(ws)
            );
        }
    }
}

#[test]
fn spammers_repeat_themselves() {
    let m = model();
    let twt = feature_index("Twt_Sim").unwrap();
    for seed in 0..5 {
        let out = generate(&SynthConfig {
            n_users: 100,
            months: 2,
            seed,
            ..Default::default()
        })
        .unwrap();
        let roles = roles(&out);
        let mut by_role: HashMap<Role, BTreeMap<(String, String), f64>> = HashMap::new();
        for v in features(&out, &m) {
            by_role
                .entry(roles[v.user_id.as_str()].0)
                .or_default()
                .insert((v.window.clone(), v.user_id.clone()), v.values[twt]);
        }
        let avg = |r: Role| mean(&by_role[&r].values().copied().collect::<Vec<_>>());
        assert!(avg(Role::Spammer) <= avg(Role::Influencer), "seed {seed}");
    }
}

#[test]
fn output_survives_a_jsonl_round_trip() {
    let out = generate(&SynthConfig {
        n_users: 30,
        seed: 2,
        ..Default::default()
    })
    .unwrap();
    let mut buf = Vec::new();
    write_jsonl(&out.dataset, &mut buf).unwrap();
    let back = read_dataset(buf.as_slice(), "synth").unwrap();
    assert!(back.same_records(&out.dataset));
    let mut again = Vec::new();
    write_jsonl(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn every_user_has_enough_posts() {
    let out = generate(&SynthConfig {
        n_users: 50,
        posts_min: 10,
        posts_max: 20,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    assert!(out.dataset.users.iter().all(|u| u.posts.len() >= 50));
    assert_eq!(out.labels.len(), 50 * 10);
}
