//! Labeled synthetic datasets.
//!
//! Three user roles are generated. Influencers post almost only about one
//! home domain, never duplicate, have far more followers than friends and
//! collect many, mostly positive replies. Spammers spread their posts over
//! every domain, repeat texts and URLs and follow far more accounts than
//! follow them. Ordinary users sit in between. `separation` interpolates
//! influencer and spammer behavior between the ordinary baseline (0) and
//! the full contrast (1).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Datelike, Months, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{domain_vocabularies, draw_filler, DomainVocabulary};
use crate::ingest::{write_jsonl, Dataset, Post, Reply, UserProfile};
use crate::learn::{write_labels, Label, LabelMap};
use crate::semantics::SentimentLexicon;

const SITES_PER_DOMAIN: usize = 3;
const PAGES_PER_SITE: usize = 20;
const PAGE_WORDS: usize = 30;
const BLOCKED_URL_RATE: f64 = 0.03;
/// Duplicates copy one of this many latest posts, so repeats land in the
/// same month.
const RECENT_POSTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_domains: usize,
    pub influencer_fraction: f64,
    pub spammer_fraction: f64,
    pub posts_min: usize,
    pub posts_max: usize,
    /// Lower bound applied to every user's post count.
    pub min_posts_floor: usize,
    pub separation: f64,
    pub months: u32,
    /// First month of the corpus, `YYYY-MM`.
    pub start: String,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 200,
            n_domains: 10,
            influencer_fraction: 0.2,
            spammer_fraction: 0.2,
            posts_min: 50,
            posts_max: 80,
            min_posts_floor: 50,
            separation: 0.9,
            months: 6,
            start: "2017-01".into(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Argument(msg));
        let pools = domain_vocabularies().len();
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_domains == 0 || self.n_domains > pools {
            return bad(format!("n_domains must lie in 1..={pools}"));
        }
        if !(self.influencer_fraction > 0.0 && self.influencer_fraction <= 1.0) {
            return bad(format!(
                "influencer_fraction {} must lie in (0, 1]",
                self.influencer_fraction
            ));
        }
        if !(0.0..1.0).contains(&self.spammer_fraction) {
            return bad(format!(
                "spammer_fraction {} must lie in [0, 1)",
                self.spammer_fraction
            ));
        }
        if self.influencer_fraction + self.spammer_fraction > 1.0 + 1e-12 {
            return bad("influencer_fraction + spammer_fraction exceeds 1".into());
        }
        if self.posts_min == 0 || self.posts_min > self.posts_max {
            return bad(format!(
                "posts range {}..={} must be positive and non-empty",
                self.posts_min, self.posts_max
            ));
        }
        if !(0.0..=1.0).contains(&self.separation) {
            return bad(format!("separation {} must lie in [0, 1]", self.separation));
        }
        if self.months == 0 {
            return bad("months must be at least 1".into());
        }
        self.start_time()?;
        Ok(())
    }

    pub fn start_time(&self) -> Result<DateTime<Utc>> {
        let parsed = self.start.split_once('-').and_then(|(y, m)| {
            let y: i32 = y.parse().ok()?;
            let m: u32 = m.parse().ok()?;
            Utc.with_ymd_and_hms(y, m, 1, 0, 0, 0).single()
        });
        parsed.ok_or_else(|| Error::Argument(format!("start {:?} is not YYYY-MM", self.start)))
    }

    /// Applies `key=value` lines (blank lines and `#` comments ignored).
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("config line {}: expected key=value", i + 1))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Format(format!("config line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Argument(format!("bad value {v:?} for {key}")))
        }
        match key {
            "n_users" => self.n_users = num(key, value)?,
            "n_domains" => self.n_domains = num(key, value)?,
            "influencer_fraction" => self.influencer_fraction = num(key, value)?,
            "spammer_fraction" => self.spammer_fraction = num(key, value)?,
            "posts_min" => self.posts_min = num(key, value)?,
            "posts_max" => self.posts_max = num(key, value)?,
            "min_posts_floor" => self.min_posts_floor = num(key, value)?,
            "separation" => self.separation = num(key, value)?,
            "months" => self.months = num(key, value)?,
            "start" => self.start = value.to_string(),
            "seed" => self.seed = num(key, value)?,
            other => return Err(Error::Argument(format!("unknown synth key {other:?}"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Influencer,
    Ordinary,
    Spammer,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Influencer => "influencer",
            Role::Ordinary => "ordinary",
            Role::Spammer => "spammer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserTruth {
    pub user_id: String,
    pub role: Role,
    pub home_domain: String,
}

pub struct SynthOutput {
    pub dataset: Dataset,
    pub labels: LabelMap,
    pub truth: Vec<UserTruth>,
    /// Page texts behind the generated URLs, by canonical URL.
    pub pages: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy)]
struct Behavior {
    chatter: f64,
    home_p: f64,
    /// Share of core words in a topical post; the rest is peripheral
    /// vocabulary and filler.
    core: f64,
    dup: f64,
    url: f64,
    log_fol: (f64, f64),
    log_frd: (f64, f64),
    replies: f64,
    positive_reply: f64,
    retweets: f64,
    likes: f64,
    age_years: (f64, f64),
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + s * (b - a)
}

fn lerp2(a: (f64, f64), b: (f64, f64), s: f64) -> (f64, f64) {
    (lerp(a.0, b.0, s), lerp(a.1, b.1, s))
}

impl Behavior {
    fn ordinary() -> Self {
        Behavior {
            chatter: 0.2,
            home_p: 0.6,
            core: 0.8,
            dup: 0.1,
            url: 0.3,
            log_fol: (2.0, 3.0),
            log_frd: (2.0, 3.0),
            replies: 1.0,
            positive_reply: 0.5,
            retweets: 3.0,
            likes: 5.0,
            age_years: (1.0, 8.0),
        }
    }

    fn extreme(role: Role, n_domains: usize) -> Self {
        match role {
            Role::Ordinary => Self::ordinary(),
            Role::Influencer => Behavior {
                chatter: 0.1,
                home_p: 1.0,
                core: 0.45,
                dup: 0.0,
                url: 0.5,
                log_fol: (3.0, 4.5),
                log_frd: (2.0, 2.8),
                replies: 3.0,
                positive_reply: 0.85,
                retweets: 20.0,
                likes: 50.0,
                age_years: (3.0, 10.0),
            },
            Role::Spammer => Behavior {
                chatter: 0.0,
                home_p: 1.0 / n_domains as f64,
                core: 0.8,
                dup: 0.85,
                url: 0.8,
                log_fol: (1.0, 2.2),
                log_frd: (3.0, 3.7),
                replies: 0.3,
                positive_reply: 0.15,
                retweets: 0.5,
                likes: 1.0,
                age_years: (0.1, 2.0),
            },
        }
    }

    fn at(role: Role, n_domains: usize, s: f64) -> Self {
        let o = Self::ordinary();
        let e = Self::extreme(role, n_domains);
        Behavior {
            chatter: lerp(o.chatter, e.chatter, s),
            home_p: lerp(o.home_p, e.home_p, s),
            core: lerp(o.core, e.core, s),
            dup: lerp(o.dup, e.dup, s),
            url: lerp(o.url, e.url, s),
            log_fol: lerp2(o.log_fol, e.log_fol, s),
            log_frd: lerp2(o.log_frd, e.log_frd, s),
            replies: lerp(o.replies, e.replies, s),
            positive_reply: lerp(o.positive_reply, e.positive_reply, s),
            retweets: lerp(o.retweets, e.retweets, s),
            likes: lerp(o.likes, e.likes, s),
            age_years: lerp2(o.age_years, e.age_years, s),
        }
    }
}

/// Knuth's method; means here stay small enough for `exp(-mean)`.
fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let limit = (-mean).exp();
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

fn uniform_in<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn domain_text<R: Rng>(v: &DomainVocabulary, words: usize, core: f64, rng: &mut R) -> String {
    let out: Vec<&str> = (0..words)
        .map(|_| {
            let roll: f64 = rng.random();
            if roll < core {
                v.core().choose(rng).expect("core words").as_str()
            } else if roll < 0.9 {
                v.peripheral()
                    .choose(rng)
                    .expect("peripheral words")
                    .as_str()
            } else {
                draw_filler(rng)
            }
        })
        .collect();
    out.join(" ")
}

fn chatter_text<R: Rng>(words: usize, rng: &mut R) -> String {
    (0..words)
        .map(|_| draw_filler(rng))
        .collect::<Vec<_>>()
        .join(" ")
}

fn page_url(v: &DomainVocabulary, site: usize, page: usize) -> String {
    format!("https://{}{site}.example/{page}", v.slug())
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let domains = &domain_vocabularies()[..config.n_domains];
    let lexicon = SentimentLexicon::bundled();
    let positive = lexicon.terms_with_sign(true);
    let negative = lexicon.terms_with_sign(false);
    let start = config.start_time()?;

    let mut pages = BTreeMap::new();
    for v in domains {
        for site in 0..SITES_PER_DOMAIN {
            for page in 0..PAGES_PER_SITE {
                pages.insert(
                    page_url(v, site, page),
                    domain_text(v, PAGE_WORDS, 0.8, &mut rng),
                );
            }
        }
    }

    let n = config.n_users;
    let n_inf = ((n as f64 * config.influencer_fraction).round() as usize).clamp(1, n);
    let n_spam = ((n as f64 * config.spammer_fraction).round() as usize).min(n - n_inf);
    let mut roles: Vec<Role> = std::iter::repeat_n(Role::Influencer, n_inf)
        .chain(std::iter::repeat_n(Role::Spammer, n_spam))
        .chain(std::iter::repeat_n(Role::Ordinary, n - n_inf - n_spam))
        .collect();
    roles.shuffle(&mut rng);

    let month_starts: Vec<DateTime<Utc>> = (0..=config.months)
        .map(|m| start + Months::new(m))
        .collect();
    let lo = config.posts_min.max(config.min_posts_floor);
    let hi = config.posts_max.max(lo);

    let mut users = Vec::with_capacity(n);
    let mut replies = Vec::new();
    let mut truth = Vec::with_capacity(n);
    let mut labels = LabelMap::new();
    for (ui, &role) in roles.iter().enumerate() {
        let user_id = format!("u{ui:05}");
        let home = rng.random_range(0..domains.len());
        let b = Behavior::at(role, domains.len(), config.separation);
        let fol = 10f64.powf(uniform_in(&mut rng, b.log_fol)).round() as u64;
        let frd = 10f64.powf(uniform_in(&mut rng, b.log_frd)).round() as u64;
        let age_days = uniform_in(&mut rng, b.age_years) * 365.25;
        let account_created_at = start - chrono::Duration::seconds((age_days * 86_400.0) as i64);

        let count = rng.random_range(lo..=hi);
        let mut times: Vec<DateTime<Utc>> = (0..count)
            .map(|i| {
                let m = i % config.months as usize;
                let span = (month_starts[m + 1] - month_starts[m]).num_seconds();
                month_starts[m] + chrono::Duration::seconds(rng.random_range(0..span))
            })
            .collect();
        times.sort();

        let mut posts: Vec<Post> = Vec::with_capacity(count);
        for (i, created_at) in times.into_iter().enumerate() {
            let id = format!("{user_id}-p{i:04}");
            let (text, mut urls) = if !posts.is_empty() && rng.random_bool(b.dup) {
                let recent = posts.len().min(RECENT_POSTS);
                let src = &posts[posts.len() - 1 - rng.random_range(0..recent)];
                (src.text.clone(), src.urls.clone())
            } else if rng.random_bool(b.chatter) {
                let words = rng.random_range(7..=10);
                (chatter_text(words, &mut rng), Vec::new())
            } else {
                let d = if rng.random_bool(b.home_p) || domains.len() == 1 {
                    home
                } else {
                    let other = rng.random_range(0..domains.len() - 1);
                    if other >= home {
                        other + 1
                    } else {
                        other
                    }
                };
                let v = &domains[d];
                let words = rng.random_range(7..=10);
                let text = domain_text(v, words, b.core, &mut rng);
                let mut urls = Vec::new();
                if rng.random_bool(b.url) {
                    let site = rng.random_range(0..SITES_PER_DOMAIN);
                    let page = rng.random_range(0..PAGES_PER_SITE);
                    urls.push(format!("{}?p={id}", page_url(v, site, page)));
                }
                (text, urls)
            };
            if rng.random_bool(BLOCKED_URL_RATE) {
                if rng.random_bool(0.5) {
                    urls.push(format!("https://www.youtube.com/watch?v={id}"));
                } else {
                    urls.push(format!("https://www.facebook.com/{user_id}/posts/{i}"));
                }
            }

            let n_replies = poisson(&mut rng, b.replies) as usize;
            let mut reply_ids = Vec::with_capacity(n_replies);
            for k in 0..n_replies {
                let pool = if rng.random_bool(b.positive_reply) {
                    &positive
                } else {
                    &negative
                };
                let mut words: Vec<&str> = (0..rng.random_range(2..=4))
                    .map(|_| draw_filler(&mut rng))
                    .collect();
                for _ in 0..rng.random_range(1..=2) {
                    words.push(pool.choose(&mut rng).expect("lexicon terms"));
                }
                let rid = format!("{id}-r{k}");
                reply_ids.push(rid.clone());
                replies.push(Reply {
                    id: rid,
                    parent_post_id: id.clone(),
                    user_id: Some(format!("u{:05}", rng.random_range(0..n))),
                    text: words.join(" "),
                    created_at: created_at + chrono::Duration::minutes(rng.random_range(1..600)),
                });
            }

            posts.push(Post {
                id,
                user_id: user_id.clone(),
                text,
                urls,
                created_at,
                retweet_count: poisson(&mut rng, b.retweets),
                like_count: poisson(&mut rng, b.likes),
                reply_ids,
            });
        }

        for (d, v) in domains.iter().enumerate() {
            let label = if role == Role::Influencer && d == home {
                Label::Influencer
            } else {
                Label::NonInfluencer
            };
            labels.insert((user_id.clone(), v.category.clone()), label);
        }
        truth.push(UserTruth {
            user_id: user_id.clone(),
            role,
            home_domain: domains[home].category.clone(),
        });
        users.push(UserProfile {
            user_id,
            followers_count: fol,
            friends_count: frd,
            account_created_at,
            posts,
        });
    }

    Ok(SynthOutput {
        dataset: Dataset {
            users,
            replies,
            provenance: Default::default(),
        },
        labels,
        truth,
        pages,
    })
}

impl SynthOutput {
    /// Writes `dataset.jsonl`, `labels.csv`, `truth.csv`, `urls.tsv` and
    /// the `pages/` texts it points to.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        let pages_dir = dir.join("pages");
        fs::create_dir_all(&pages_dir).map_err(|e| Error::io(&pages_dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            fs::File::create(&path)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(&path, e))
        };
        write_jsonl(&self.dataset, create("dataset.jsonl")?)?;
        write_labels(&self.labels, create("labels.csv")?)?;

        let mut truth = csv::Writer::from_writer(create("truth.csv")?);
        truth.write_record(["user_id", "role", "home_domain"])?;
        for t in &self.truth {
            truth.write_record([t.user_id.as_str(), t.role.as_str(), t.home_domain.as_str()])?;
        }
        truth
            .flush()
            .map_err(|e| Error::io(dir.join("truth.csv"), e))?;

        let mut tsv = String::new();
        for (i, (url, text)) in self.pages.iter().enumerate() {
            let rel = format!("pages/{i:05}.txt");
            let path = dir.join(&rel);
            fs::write(&path, format!("{text}\n")).map_err(|e| Error::io(&path, e))?;
            tsv.push_str(&format!("{url}\t{rel}\n"));
        }
        let path = dir.join("urls.tsv");
        fs::write(&path, tsv).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    pub fn url_text_map(&self) -> crate::semantics::UrlTextMap {
        crate::semantics::UrlTextMap::new(self.pages.clone())
    }
}

/// Calendar month index of `t` relative to `start`.
pub fn month_offset(start: DateTime<Utc>, t: DateTime<Utc>) -> i32 {
    (t.year() - start.year()) * 12 + t.month() as i32 - start.month() as i32
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: 12,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_bytes() {
        let a = generate(&small(7)).unwrap();
        let b = generate(&small(7)).unwrap();
        let mut ja = Vec::new();
        let mut jb = Vec::new();
        write_jsonl(&a.dataset, &mut ja).unwrap();
        write_jsonl(&b.dataset, &mut jb).unwrap();
        assert_eq!(ja, jb);
        let mut jc = Vec::new();
        write_jsonl(&generate(&small(8)).unwrap().dataset, &mut jc).unwrap();
        assert_ne!(ja, jc);
    }

    #[test]
    fn every_user_has_enough_posts_in_every_month() {
        let out = generate(&small(1)).unwrap();
        let start = small(1).start_time().unwrap();
        for u in &out.dataset.users {
            assert!(u.posts.len() >= 50);
            for m in 0..6 {
                assert!(u
                    .posts
                    .iter()
                    .any(|p| month_offset(start, p.created_at) == m));
            }
            assert!(u
                .posts
                .iter()
                .all(|p| (0..6).contains(&month_offset(start, p.created_at))));
        }
    }

    #[test]
    fn labels_cover_users_and_domains() {
        let out = generate(&small(2)).unwrap();
        assert_eq!(out.labels.len(), 12 * 10);
        let positives = out.labels.values().filter(|l| l.is_positive()).count();
        let influencers = out
            .truth
            .iter()
            .filter(|t| t.role == Role::Influencer)
            .count();
        assert_eq!(positives, influencers);
        assert!(influencers >= 1);
    }

    #[test]
    fn round_trips_through_ingest() {
        let out = generate(&small(3)).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&out.dataset, &mut buf).unwrap();
        let back = crate::ingest::read_dataset(buf.as_slice(), "synth").unwrap();
        assert!(back.same_records(&out.dataset));
        assert_eq!(back.provenance.load.malformed_lines, 0);
    }

    #[test]
    fn config_validation_and_kv() {
        let mut c = SynthConfig::default();
        c.apply_kv("# comment\nn_users = 5\nseparation=0.3\nstart=2018-04\n")
            .unwrap();
        assert_eq!(
            (c.n_users, c.separation, c.start.as_str()),
            (5, 0.3, "2018-04")
        );
        assert!(c.apply_kv("bogus=1").is_err());
        for bad in [
            SynthConfig {
                influencer_fraction: 0.0,
                ..Default::default()
            },
            SynthConfig {
                spammer_fraction: 0.9,
                ..Default::default()
            },
            SynthConfig {
                separation: 1.5,
                ..Default::default()
            },
            SynthConfig {
                months: 0,
                ..Default::default()
            },
            SynthConfig {
                n_domains: 21,
                ..Default::default()
            },
            SynthConfig {
                posts_min: 9,
                posts_max: 3,
                ..Default::default()
            },
            SynthConfig {
                start: "2017".into(),
                ..Default::default()
            },
        ] {
            assert!(matches!(generate(&bad), Err(Error::Argument(_))), "{bad:?}");
        }
    }

    #[test]
    fn poisson_mean_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws: Vec<u64> = (0..20_000).map(|_| poisson(&mut rng, 3.0)).collect();
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        assert!((mean - 3.0).abs() < 0.05, "{mean}");
    }
}
