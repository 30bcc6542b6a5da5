//! Phase wiring with on-disk artifacts.
//!
//! Every phase reads its inputs from, and writes its outputs to, an output
//! directory, so each one can be re-run from the persisted artifacts of the
//! previous one. Only [`MANIFEST`] carries timestamps.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{
    compute_features, read_features_csv, read_features_json, write_features_csv,
    write_features_json, FeatureVector, DEFAULT_TAU,
};
use crate::fixtures::fixture_corpus;
use crate::ingest::{
    cleanse, load_dataset, partition_windows, write_jsonl, CleanseConfig, CleanseReport, Dataset,
    Granularity, HostBlocklist,
};
use crate::learn::{
    evaluate, label_vectors, read_labels, split, train, EvalReport, LabelMap, Model, ModelKind,
    TrainConfig,
};
use crate::plots;
use crate::ranking::{rank_all, temporal_series, write_rankings_csv, write_rankings_json, RankKey};
use crate::semantics::{
    annotate_dataset, load_corpus_dir, train_category_model, Annotations, Annotator, CategoryModel,
    NluAnnotator, NluClient, NluMode, OfflineAnnotator, SentimentLexicon, UrlTextMap,
    UrlTextSource, DEFAULT_TOP_K,
};

pub const CLEANSED: &str = "cleansed.jsonl";
pub const CLEANSE_REPORT: &str = "cleanse_report.json";
pub const CATEGORY_MODEL: &str = "category_model.json";
pub const ANNOTATIONS: &str = "annotations.jsonl";
pub const WINDOWS: &str = "windows.csv";
pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_JSON: &str = "features.json";
pub const RANKINGS_CSV: &str = "rankings.csv";
pub const RANKINGS_JSON: &str = "rankings.json";
pub const REPORT: &str = "report.json";
pub const MANIFEST: &str = "manifest.json";
pub const NLU_CACHE_DIR: &str = "nlu_cache";

pub fn model_file(kind: ModelKind) -> String {
    format!("model_{kind}.json")
}

pub fn eval_file(kind: ModelKind) -> String {
    format!("eval_{kind}.json")
}

pub fn roc_file(kind: ModelKind) -> String {
    format!("roc_{kind}.csv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Offline,
    NluCached,
    NluLive,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offline" => Ok(Mode::Offline),
            "nlu-cached" => Ok(Mode::NluCached),
            "nlu-live" => Ok(Mode::NluLive),
            other => Err(Error::Argument(format!(
                "unknown mode {other:?} (expected offline, nlu-cached or nlu-live)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Argument(format!(
                "unknown report format {other:?} (expected json or csv)"
            ))),
        }
    }
}

/// Every tunable of the pipeline. Paths left `None` fall back to the
/// bundled fixtures or to artifacts inside the output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Settings {
    pub corpus: Option<PathBuf>,
    pub sentiment_lexicon: Option<PathBuf>,
    pub url_map: Option<PathBuf>,
    pub blocklist: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub nlu_cache: Option<PathBuf>,
    pub tau: f64,
    pub top_k: usize,
    pub min_posts: usize,
    pub span: Option<(DateTime<Utc>, DateTime<Utc>)>,
    /// Keep empty months between the first and last window.
    pub dense: bool,
    pub mode: Mode,
    pub report: ReportFormat,
    pub plots: bool,
    pub key: RankKey,
    pub train: TrainConfig,
    pub test_fraction: f64,
    pub models: Vec<ModelKind>,
    pub seed: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            corpus: None,
            sentiment_lexicon: None,
            url_map: None,
            blocklist: None,
            labels: None,
            nlu_cache: None,
            tau: DEFAULT_TAU,
            top_k: DEFAULT_TOP_K,
            min_posts: 50,
            span: None,
            dense: false,
            mode: Mode::Offline,
            report: ReportFormat::Csv,
            plots: false,
            key: RankKey::W,
            train: TrainConfig::default(),
            test_fraction: 0.3,
            models: ModelKind::ALL.to_vec(),
            seed: 0,
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::Argument(format!(
                "tau {} must lie in [0, 1]",
                self.tau
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Argument("top-k must be at least 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "test fraction {} must lie strictly between 0 and 1",
                self.test_fraction
            )));
        }
        if self.train.learning_rate.is_nan()
            || self.train.learning_rate <= 0.0
            || self.train.l2 < 0.0
        {
            return Err(Error::Argument(
                "learning rate must be positive and l2 non-negative".into(),
            ));
        }
        if let Some((s, e)) = self.span {
            if s >= e {
                return Err(Error::Argument(format!(
                    "window span start {s} is not before end {e}"
                )));
            }
        }
        Ok(())
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Cleanses `raw` and writes [`CLEANSED`] and [`CLEANSE_REPORT`].
pub fn ingest_phase(raw: &Dataset, s: &Settings, out: &Path) -> Result<(Dataset, CleanseReport)> {
    ensure_dir(out)?;
    let blocklist = match &s.blocklist {
        Some(p) => HostBlocklist::from_file(p)?,
        None => HostBlocklist::default(),
    };
    let (clean, report) = cleanse(
        raw,
        &CleanseConfig {
            min_posts: s.min_posts,
            blocklist,
        },
    );
    let mut w = create(&out.join(CLEANSED))?;
    write_jsonl(&clean, &mut w)?;
    w.flush().map_err(|e| Error::io(out.join(CLEANSED), e))?;
    write_json(&out.join(CLEANSE_REPORT), &report)?;
    Ok((clean, report))
}

pub fn category_model(s: &Settings) -> Result<CategoryModel> {
    let docs = match &s.corpus {
        Some(dir) => load_corpus_dir(dir)?,
        None => fixture_corpus(),
    };
    train_category_model(&docs)
}

pub fn build_annotator(s: &Settings, out: &Path) -> Result<Box<dyn Annotator>> {
    let cache = s
        .nlu_cache
        .clone()
        .unwrap_or_else(|| out.join(NLU_CACHE_DIR));
    Ok(match s.mode {
        Mode::Offline => {
            let lexicon = match &s.sentiment_lexicon {
                Some(p) => SentimentLexicon::from_file(p)?,
                None => SentimentLexicon::bundled(),
            };
            let model = category_model(s)?;
            write_text(&out.join(CATEGORY_MODEL), &model.to_json()?)?;
            Box::new(OfflineAnnotator {
                model,
                lexicon,
                top_k: s.top_k,
            })
        }
        Mode::NluCached => Box::new(NluAnnotator {
            client: NluClient::from_env(NluMode::Cached, cache)?,
            top_k: s.top_k,
        }),
        Mode::NluLive => Box::new(NluAnnotator {
            client: NluClient::from_env(NluMode::Live, cache)?,
            top_k: s.top_k,
        }),
    })
}

pub fn url_source(s: &Settings) -> Result<UrlTextSource> {
    match (&s.url_map, s.mode) {
        (Some(p), _) => Ok(UrlTextSource::Offline(UrlTextMap::from_tsv(p)?)),
        (None, Mode::NluLive) => Ok(UrlTextSource::online(std::time::Duration::from_secs(20))),
        (None, _) => Ok(UrlTextSource::Offline(UrlTextMap::default())),
    }
}

/// Annotates posts, URL pages and replies; writes [`ANNOTATIONS`] (and the
/// trained [`CATEGORY_MODEL`] in offline mode).
pub fn classify_phase(d: &Dataset, s: &Settings, out: &Path) -> Result<Annotations> {
    ensure_dir(out)?;
    let annotator = build_annotator(s, out)?;
    let urls = url_source(s)?;
    let ann = annotate_dataset(d, annotator.as_ref(), &urls);
    let mut w = create(&out.join(ANNOTATIONS))?;
    ann.write_jsonl(&mut w)?;
    w.flush().map_err(|e| Error::io(out.join(ANNOTATIONS), e))?;
    Ok(ann)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: String,
    pub users: usize,
    pub posts: usize,
    pub replies: usize,
    pub vectors: usize,
}

pub struct FeatureRun {
    pub n_domains: usize,
    pub windows: Vec<WindowSummary>,
    pub vectors: Vec<FeatureVector>,
}

pub fn features_path(out: &Path, format: ReportFormat) -> PathBuf {
    out.join(match format {
        ReportFormat::Csv => FEATURES_CSV,
        ReportFormat::Json => FEATURES_JSON,
    })
}

/// Windows the dataset, computes vectors and writes [`WINDOWS`] plus the
/// features file in the configured format.
pub fn features_phase(
    d: &Dataset,
    ann: &Annotations,
    s: &Settings,
    out: &Path,
) -> Result<FeatureRun> {
    ensure_dir(out)?;
    let windows = partition_windows(d, Granularity::Month, s.span, s.dense)?;
    let (n_domains, vectors) = compute_features(&windows, ann, s.tau)?;
    let summaries: Vec<WindowSummary> = windows
        .iter()
        .map(|(w, wd)| WindowSummary {
            window: w.label.clone(),
            users: wd.users.len(),
            posts: wd.post_count(),
            replies: wd.replies.len(),
            vectors: vectors.iter().filter(|v| v.window == w.label).count(),
        })
        .collect();

    let mut csv = csv::Writer::from_writer(create(&out.join(WINDOWS))?);
    csv.write_record(["window", "users", "posts", "replies", "vectors"])?;
    for w in &summaries {
        csv.write_record([
            w.window.clone(),
            w.users.to_string(),
            w.posts.to_string(),
            w.replies.to_string(),
            w.vectors.to_string(),
        ])?;
    }
    csv.flush().map_err(|e| Error::io(out.join(WINDOWS), e))?;

    let path = features_path(out, s.report);
    let mut w = create(&path)?;
    match s.report {
        ReportFormat::Csv => write_features_csv(&vectors, &mut w)?,
        ReportFormat::Json => write_features_json(&vectors, &mut w)?,
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(FeatureRun {
        n_domains,
        windows: summaries,
        vectors,
    })
}

/// Reads a features file, picking the format from its extension.
pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>> {
    let r = open(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        read_features_json(r)
    } else {
        read_features_csv(r)
    }
}

/// The features artifact of `out`, whichever format it was written in.
pub fn find_features(out: &Path) -> Result<PathBuf> {
    [FEATURES_CSV, FEATURES_JSON]
        .iter()
        .map(|f| out.join(f))
        .find(|p| p.exists())
        .ok_or_else(|| Error::Argument(format!("no features file in {}", out.display())))
}

pub fn load_dataset_file(path: &Path) -> Result<Dataset> {
    load_dataset(path)
}

pub fn load_annotations(path: &Path) -> Result<Annotations> {
    Annotations::read_jsonl(open(path)?)
}

pub fn load_labels(path: &Path) -> Result<LabelMap> {
    read_labels(open(path)?)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Model::from_json(&text)
}

/// Writes all `(window, domain)` rankings; with `cell`, only that one.
pub fn rank_phase(
    vectors: &[FeatureVector],
    s: &Settings,
    model: Option<&Model>,
    cell: Option<(&str, &str)>,
    out: &mut dyn Write,
) -> Result<()> {
    let rankings = match cell {
        Some((domain, window)) => vec![crate::ranking::rank_domain(
            vectors, domain, window, s.key, model,
        )?],
        None => rank_all(vectors, s.key, model)?,
    };
    match s.report {
        ReportFormat::Csv => write_rankings_csv(&rankings, s.key, out),
        ReportFormat::Json => write_rankings_json(&rankings, out),
    }
}

pub fn rankings_path(out: &Path, format: ReportFormat) -> PathBuf {
    out.join(match format {
        ReportFormat::Csv => RANKINGS_CSV,
        ReportFormat::Json => RANKINGS_JSON,
    })
}

fn labeled_split(
    vectors: &[FeatureVector],
    labels: &LabelMap,
    s: &Settings,
) -> Result<(
    Vec<crate::learn::LabeledExample>,
    Vec<crate::learn::LabeledExample>,
)> {
    let examples = label_vectors(vectors, labels);
    split(&examples, s.test_fraction, s.seed)
}

/// Trains every configured model kind on the training split and writes
/// `model_<kind>.json`.
pub fn train_phase(
    vectors: &[FeatureVector],
    labels: &LabelMap,
    s: &Settings,
    out: &Path,
) -> Result<Vec<Model>> {
    ensure_dir(out)?;
    let (train_set, _) = labeled_split(vectors, labels, s)?;
    let config = TrainConfig {
        seed: s.seed,
        ..s.train
    };
    let mut models = Vec::new();
    for &kind in &s.models {
        let m = train(&train_set, kind, &config)?;
        write_text(&out.join(model_file(kind)), &(m.to_json()? + "\n"))?;
        models.push(m);
    }
    Ok(models)
}

/// Evaluates models on the held-out split; writes `eval_<kind>.json`,
/// `roc_<kind>.csv` and, with plots enabled, `roc.svg` and `accuracy.svg`.
pub fn eval_phase(
    models: &[Model],
    vectors: &[FeatureVector],
    labels: &LabelMap,
    s: &Settings,
    out: &Path,
) -> Result<Vec<EvalReport>> {
    ensure_dir(out)?;
    let (_, test) = labeled_split(vectors, labels, s)?;
    let mut reports = Vec::new();
    for m in models {
        let r = evaluate(m, &test)?;
        write_text(&out.join(eval_file(m.kind())), &(r.to_json()? + "\n"))?;
        let mut w = create(&out.join(roc_file(m.kind())))?;
        r.write_roc_csv(&mut w)?;
        w.flush()
            .map_err(|e| Error::io(out.join(roc_file(m.kind())), e))?;
        reports.push(r);
    }
    if s.plots {
        write_text(&out.join("roc.svg"), &plots::roc_svg(&reports))?;
        write_text(&out.join("accuracy.svg"), &plots::accuracy_svg(&reports))?;
    }
    Ok(reports)
}

pub fn load_eval_reports(out: &Path) -> Result<Vec<EvalReport>> {
    let mut reports = Vec::new();
    for kind in ModelKind::ALL {
        let path = out.join(eval_file(kind));
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            reports.push(serde_json::from_str(&text)?);
        }
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopUser {
    pub domain: String,
    pub user_id: String,
    pub total_w: f64,
    pub series: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub windows: Vec<String>,
    pub vectors: usize,
    pub domains: Vec<String>,
    pub top_users: Vec<TopUser>,
    pub models: Vec<EvalReport>,
}

/// Summarizes the features and evaluations in `out` into [`REPORT`]; with
/// plots enabled, also draws `temporal_w.svg` for the top user of each of
/// the first domains.
pub fn report_phase(out: &Path, s: &Settings) -> Result<Report> {
    let vectors = load_features(&find_features(out)?)?;
    let mut windows: Vec<String> = vectors.iter().map(|v| v.window.clone()).collect();
    windows.sort();
    windows.dedup();
    let mut domains: Vec<String> = vectors.iter().map(|v| v.domain.clone()).collect();
    domains.sort();
    domains.dedup();

    let mut top_users = Vec::new();
    for domain in &domains {
        let mut totals: std::collections::BTreeMap<&str, f64> = Default::default();
        for v in vectors.iter().filter(|v| &v.domain == domain) {
            *totals.entry(v.user_id.as_str()).or_default() += v.w();
        }
        let best = totals
            .into_iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(a.0)));
        if let Some((user, total_w)) = best {
            top_users.push(TopUser {
                domain: domain.clone(),
                user_id: user.to_string(),
                total_w,
                series: temporal_series(&vectors, user, domain),
            });
        }
    }
    let report = Report {
        windows,
        vectors: vectors.len(),
        domains,
        top_users,
        models: load_eval_reports(out)?,
    };
    write_json(&out.join(REPORT), &report)?;
    if s.plots {
        let series: Vec<(String, Vec<(String, f64)>)> = report
            .top_users
            .iter()
            .take(5)
            .map(|t| (format!("{} {}", t.user_id, t.domain), t.series.clone()))
            .collect();
        write_text(
            &out.join("temporal_w.svg"),
            &plots::temporal_svg("W over time (top user per domain)", &series),
        )?;
        if !report.models.is_empty() {
            write_text(&out.join("roc.svg"), &plots::roc_svg(&report.models))?;
            write_text(
                &out.join("accuracy.svg"),
                &plots::accuracy_svg(&report.models),
            )?;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineSummary {
    pub cleanse: CleanseReport,
    pub cleansed_posts: usize,
    pub n_domains: usize,
    pub windows: Vec<WindowSummary>,
    pub vectors: usize,
    pub trained: bool,
    pub models: Vec<EvalReport>,
}

/// All phases in order: ingest, classify, features, rank, train, eval,
/// report. Training and evaluation are skipped when no labels are set.
pub fn run_pipeline(raw: &Dataset, s: &Settings, out: &Path) -> Result<PipelineSummary> {
    s.validate()?;
    ensure_dir(out)?;
    let clock = std::time::Instant::now();
    let lap = |phase: &str| log::info!("{phase} done at {:.2?}", clock.elapsed());
    let (clean, cleanse_report) = ingest_phase(raw, s, out)?;
    lap("ingest");
    let ann = classify_phase(&clean, s, out)?;
    lap("classify");
    let run = features_phase(&clean, &ann, s, out)?;
    lap("features");
    // Later phases read the persisted vectors, exactly as a separate
    // `train` or `rank` run would.
    let vectors = load_features(&features_path(out, s.report))?;

    let (models, reports) = match &s.labels {
        Some(path) => {
            let labels = load_labels(path)?;
            let models = train_phase(&vectors, &labels, s, out)?;
            lap("train");
            let reports = eval_phase(&models, &vectors, &labels, s, out)?;
            lap("eval");
            (models, reports)
        }
        None => {
            log::warn!("no labels given; skipping train and eval");
            (Vec::new(), Vec::new())
        }
    };

    let ranking_model = models.iter().find(|m| m.kind() == ModelKind::Logistic);
    let key_model = match s.key {
        RankKey::W => None,
        RankKey::ModelProbability => Some(ranking_model.ok_or_else(|| {
            Error::Argument("ranking by model_probability needs labels to train a model".into())
        })?),
    };
    let path = rankings_path(out, s.report);
    let mut w = create(&path)?;
    rank_phase(&vectors, s, key_model, None, &mut w)?;
    w.flush().map_err(|e| Error::io(&path, e))?;

    lap("rank");
    report_phase(out, s)?;
    lap("report");
    Ok(PipelineSummary {
        cleanse: cleanse_report,
        cleansed_posts: clean.post_count(),
        n_domains: run.n_domains,
        windows: run.windows,
        vectors: run.vectors.len(),
        trained: !models.is_empty(),
        models: reports,
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool_version: &'a str,
    pub command: &'a str,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub artifacts: Vec<String>,
}

/// Writes [`MANIFEST`] listing the files present in `out`.
pub fn write_manifest(out: &Path, command: &str, started_at: DateTime<Utc>) -> Result<()> {
    let mut artifacts: Vec<String> = fs::read_dir(out)
        .map_err(|e| Error::io(out, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST)
        .collect();
    artifacts.sort();
    write_json(
        &out.join(MANIFEST),
        &Manifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            started_at,
            finished_at: Utc::now(),
            artifacts,
        },
    )
}
