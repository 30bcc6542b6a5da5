use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Months, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};

use domaincred::ingest::{read_dataset, Dataset};
use domaincred::learn::{ModelKind, TrainConfig};
use domaincred::pipeline::{self as pl, Mode, ReportFormat, Settings};
use domaincred::ranking::RankKey;
use domaincred::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(
    name = "domaincred",
    version,
    about = "Domain-based credibility analytics for social media users"
)]
struct Cli {
    /// Worker threads for parallel phases (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load raw JSONL, cleanse it and print the cleanse report.
    Ingest(IngestCmd),
    /// Annotate posts, URL pages and replies with domains and sentiment.
    Classify(ClassifyCmd),
    /// Compute per-window feature vectors.
    Features(FeaturesCmd),
    /// Rank users per domain and window.
    Rank(RankCmd),
    /// Train influencer classifiers on the training split.
    Train(TrainCmd),
    /// Evaluate trained classifiers on the held-out split.
    Eval(EvalCmd),
    /// Generate a labeled synthetic dataset.
    Synth(SynthCmd),
    /// Run every phase from raw JSONL to rankings and evaluation.
    Pipeline(PipelineCmd),
    /// Summarize an output directory (and draw plots).
    Report(ReportCmd),
}

#[derive(Args, Clone)]
struct IngestOpts {
    /// Users with fewer posts are dropped.
    #[arg(long, default_value_t = 50)]
    min_posts: usize,
    /// TSV of host<TAB>kind entries to strip from posts.
    #[arg(long)]
    blocklist: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ClassifyOpts {
    /// offline, nlu-cached or nlu-live.
    #[arg(long, default_value = "offline")]
    mode: Mode,
    /// Category corpus (one subdirectory per category); defaults to the bundled fixture.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Sentiment lexicon TSV (term<TAB>value); defaults to the bundled lexicon.
    #[arg(long)]
    sentiment_lexicon: Option<PathBuf>,
    /// TSV mapping URLs to local page files.
    #[arg(long)]
    url_map: Option<PathBuf>,
    /// Categories kept per text.
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// NLU response cache (default: <output-dir>/nlu_cache).
    #[arg(long)]
    nlu_cache: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct FeatureOpts {
    /// Minimum assignment score for a text to count towards a domain.
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    /// First month to include (YYYY-MM).
    #[arg(long)]
    window_start: Option<String>,
    /// Last month to include (YYYY-MM).
    #[arg(long)]
    window_end: Option<String>,
    /// Keep empty months between the first and last window.
    #[arg(long)]
    dense: bool,
}

#[derive(Args, Clone)]
struct ReportOpt {
    /// Tabular output format: csv or json.
    #[arg(long, default_value = "csv")]
    report: ReportFormat,
}

#[derive(Args, Clone)]
struct TrainOpts {
    /// Labels CSV (user_id,domain,label).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Comma-separated model kinds.
    #[arg(long, value_delimiter = ',', default_values_t = ModelKind::ALL.to_vec())]
    models: Vec<ModelKind>,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().l2)]
    l2: f64,
    /// Fraction of labeled vectors held out for evaluation.
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct IngestCmd {
    /// Raw JSONL dataset ("-" for stdin).
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    ingest: IngestOpts,
}

#[derive(Args)]
struct ClassifyCmd {
    /// Cleansed JSONL (default: <output-dir>/cleansed.jsonl).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    classify: ClassifyOpts,
}

#[derive(Args)]
struct FeaturesCmd {
    /// Cleansed JSONL (default: <output-dir>/cleansed.jsonl).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Annotations JSONL (default: <output-dir>/annotations.jsonl).
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    features: FeatureOpts,
    #[command(flatten)]
    report: ReportOpt,
}

#[derive(Args)]
struct RankCmd {
    /// Features file (default: the one in --output-dir).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Where rankings are written; stdout when absent.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// W or model_probability.
    #[arg(long, default_value = "W")]
    key: RankKey,
    /// Rank a single domain (requires --window).
    #[arg(long, requires = "window")]
    domain: Option<String>,
    /// Rank a single window (requires --domain).
    #[arg(long, requires = "domain")]
    window: Option<String>,
    /// Model JSON for model_probability (default: <output-dir>/model_logistic.json).
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    report: ReportOpt,
}

#[derive(Args)]
struct TrainCmd {
    /// Features file (default: the one in --output-dir).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    train: TrainOpts,
}

#[derive(Args)]
struct EvalCmd {
    /// Features file (default: the one in --output-dir).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory holding model_<kind>.json; results are written there too.
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    train: TrainOpts,
    /// Draw roc.svg and accuracy.svg.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct SynthCmd {
    /// Write dataset.jsonl, labels.csv, truth.csv, urls.tsv and pages/ here;
    /// without it only the dataset JSONL goes to stdout.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    domains: Option<usize>,
    #[arg(long)]
    influencer_fraction: Option<f64>,
    #[arg(long)]
    spammer_fraction: Option<f64>,
    #[arg(long)]
    posts_min: Option<usize>,
    #[arg(long)]
    posts_max: Option<usize>,
    #[arg(long)]
    separation: Option<f64>,
    #[arg(long)]
    months: Option<u32>,
    /// First month (YYYY-MM).
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct PipelineCmd {
    /// Raw JSONL dataset ("-" for stdin).
    #[arg(long, default_value = "-")]
    input: String,
    #[arg(long)]
    output_dir: PathBuf,
    #[command(flatten)]
    ingest: IngestOpts,
    #[command(flatten)]
    classify: ClassifyOpts,
    #[command(flatten)]
    features: FeatureOpts,
    #[command(flatten)]
    train: TrainOpts,
    #[command(flatten)]
    report: ReportOpt,
    /// Ranking key: W or model_probability.
    #[arg(long, default_value = "W")]
    key: RankKey,
    /// Emit SVG plots.
    #[arg(long)]
    plots: bool,
}

#[derive(Args)]
struct ReportCmd {
    #[arg(long)]
    output_dir: PathBuf,
    /// Emit SVG plots.
    #[arg(long)]
    plots: bool,
}

fn parse_month(s: &str) -> Result<DateTime<Utc>> {
    let date = NaiveDate::parse_from_str(&format!("{s}-01"), "%Y-%m-%d")
        .with_context(|| format!("invalid month {s:?} (expected YYYY-MM)"))
        .map_err(user_error)?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc())
}

fn span(f: &FeatureOpts) -> Result<Option<(DateTime<Utc>, DateTime<Utc>)>> {
    let start = f.window_start.as_deref().map(parse_month).transpose()?;
    let end = f
        .window_end
        .as_deref()
        .map(|s| parse_month(s).map(|t| t + Months::new(1)))
        .transpose()?;
    Ok(match (start, end) {
        (None, None) => None,
        (s, e) => Some((
            s.unwrap_or(DateTime::<Utc>::MIN_UTC),
            e.unwrap_or(DateTime::<Utc>::MAX_UTC),
        )),
    })
}

#[derive(Default)]
struct SettingsBuilder {
    s: Settings,
}

impl SettingsBuilder {
    fn ingest(mut self, o: &IngestOpts) -> Self {
        self.s.min_posts = o.min_posts;
        self.s.blocklist = o.blocklist.clone();
        self
    }

    fn classify(mut self, o: &ClassifyOpts) -> Self {
        self.s.mode = o.mode;
        self.s.corpus = o.corpus.clone();
        self.s.sentiment_lexicon = o.sentiment_lexicon.clone();
        self.s.url_map = o.url_map.clone();
        self.s.top_k = o.top_k;
        self.s.nlu_cache = o.nlu_cache.clone();
        self
    }

    fn features(mut self, o: &FeatureOpts) -> Result<Self> {
        self.s.tau = o.tau;
        self.s.span = span(o)?;
        self.s.dense = o.dense;
        Ok(self)
    }

    fn train(mut self, o: &TrainOpts) -> Self {
        self.s.labels = o.labels.clone();
        self.s.models = o.models.clone();
        self.s.train = TrainConfig {
            learning_rate: o.learning_rate,
            epochs: o.epochs,
            l2: o.l2,
            seed: o.seed,
        };
        self.s.test_fraction = o.test_fraction;
        self.s.seed = o.seed;
        self
    }

    fn report(mut self, o: &ReportOpt) -> Self {
        self.s.report = o.report;
        self
    }

    fn build(self) -> Result<Settings> {
        self.s.validate()?;
        Ok(self.s)
    }
}

/// Marks an error as caused by the caller's input (exit code 1).
#[derive(Debug)]
struct UserError(anyhow::Error);

impl std::fmt::Display for UserError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for UserError {}

fn user_error(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(UserError(e))
}

fn read_raw(input: &str) -> Result<Dataset> {
    let ds = if input == "-" {
        read_dataset(BufReader::new(io::stdin().lock()), "<stdin>")?
    } else {
        let file = fs::File::open(input).with_context(|| format!("cannot open {input}"))?;
        read_dataset(BufReader::new(file), input)?
    };
    Ok(ds)
}

fn input_or(dir: &Path, input: &Option<PathBuf>, name: &str) -> PathBuf {
    input.clone().unwrap_or_else(|| dir.join(name))
}

fn features_input(dir: Option<&Path>, input: &Option<PathBuf>) -> Result<PathBuf> {
    match (input, dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(pl::find_features(d)?),
        (None, None) => bail!(UserError(anyhow::anyhow!(
            "rank needs --input or --output-dir"
        ))),
    }
}

fn labels(train: &TrainOpts, cmd: &str) -> Result<domaincred::learn::LabelMap> {
    let Some(path) = &train.labels else {
        bail!(UserError(anyhow::anyhow!("{cmd} needs --labels")));
    };
    Ok(pl::load_labels(path)?)
}

fn run(cli: Cli) -> Result<()> {
    let started = Utc::now();
    match cli.command {
        Command::Ingest(c) => {
            let s = SettingsBuilder::default().ingest(&c.ingest).build()?;
            let raw = read_raw(&c.input)?;
            let (_, report) = pl::ingest_phase(&raw, &s, &c.output_dir)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            pl::write_manifest(&c.output_dir, "ingest", started)?;
        }
        Command::Classify(c) => {
            let s = SettingsBuilder::default().classify(&c.classify).build()?;
            let d = pl::load_dataset_file(&input_or(&c.output_dir, &c.input, pl::CLEANSED))?;
            let ann = pl::classify_phase(&d, &s, &c.output_dir)?;
            log::info!(
                "annotated {} posts and {} replies",
                ann.posts.len(),
                ann.replies.len()
            );
            pl::write_manifest(&c.output_dir, "classify", started)?;
        }
        Command::Features(c) => {
            let s = SettingsBuilder::default()
                .features(&c.features)?
                .report(&c.report)
                .build()?;
            let d = pl::load_dataset_file(&input_or(&c.output_dir, &c.input, pl::CLEANSED))?;
            let ann =
                pl::load_annotations(&input_or(&c.output_dir, &c.annotations, pl::ANNOTATIONS))?;
            let run = pl::features_phase(&d, &ann, &s, &c.output_dir)?;
            log::info!(
                "{} vectors over {} windows ({} domains)",
                run.vectors.len(),
                run.windows.len(),
                run.n_domains
            );
            pl::write_manifest(&c.output_dir, "features", started)?;
        }
        Command::Rank(c) => {
            let mut s = SettingsBuilder::default().report(&c.report).build()?;
            s.key = c.key;
            let vectors = pl::load_features(&features_input(c.output_dir.as_deref(), &c.input)?)?;
            let model = match c.key {
                RankKey::W => None,
                RankKey::ModelProbability => {
                    let path = match (&c.model, &c.output_dir) {
                        (Some(p), _) => p.clone(),
                        (None, Some(d)) => d.join(pl::model_file(ModelKind::Logistic)),
                        (None, None) => {
                            bail!(UserError(anyhow::anyhow!(
                                "model_probability ranking needs --model"
                            )))
                        }
                    };
                    Some(pl::load_model(&path)?)
                }
            };
            let cell = c.domain.as_deref().zip(c.window.as_deref());
            match &c.output_dir {
                Some(dir) => {
                    pl::ensure_dir(dir)?;
                    let path = pl::rankings_path(dir, s.report);
                    let mut w = io::BufWriter::new(
                        fs::File::create(&path)
                            .with_context(|| format!("cannot create {}", path.display()))?,
                    );
                    pl::rank_phase(&vectors, &s, model.as_ref(), cell, &mut w)?;
                    w.flush()?;
                    pl::write_manifest(dir, "rank", started)?;
                }
                None => {
                    let mut out = io::BufWriter::new(io::stdout().lock());
                    pl::rank_phase(&vectors, &s, model.as_ref(), cell, &mut out)?;
                    out.flush()?;
                }
            }
        }
        Command::Train(c) => {
            let s = SettingsBuilder::default().train(&c.train).build()?;
            let labels = labels(&c.train, "train")?;
            let vectors = pl::load_features(&features_input(Some(&c.output_dir), &c.input)?)?;
            for m in pl::train_phase(&vectors, &labels, &s, &c.output_dir)? {
                log::info!("trained {}", m.kind());
            }
            pl::write_manifest(&c.output_dir, "train", started)?;
        }
        Command::Eval(c) => {
            let mut s = SettingsBuilder::default().train(&c.train).build()?;
            s.plots = c.plots;
            let labels = labels(&c.train, "eval")?;
            let vectors = pl::load_features(&features_input(Some(&c.output_dir), &c.input)?)?;
            let models = s
                .models
                .iter()
                .map(|&k| pl::load_model(&c.output_dir.join(pl::model_file(k))))
                .collect::<Result<Vec<_>, _>>()?;
            for r in pl::eval_phase(&models, &vectors, &labels, &s, &c.output_dir)? {
                println!(
                    "{}\taccuracy {:.4}\terror {:.4}\tauc {:.4}",
                    r.model, r.accuracy, r.classification_error, r.auc
                );
            }
            pl::write_manifest(&c.output_dir, "eval", started)?;
        }
        Command::Synth(c) => synth(c)?,
        Command::Pipeline(c) => {
            let mut s = SettingsBuilder::default()
                .ingest(&c.ingest)
                .classify(&c.classify)
                .features(&c.features)?
                .train(&c.train)
                .report(&c.report)
                .build()?;
            s.key = c.key;
            s.plots = c.plots;
            let raw = read_raw(&c.input)?;
            let summary = pl::run_pipeline(&raw, &s, &c.output_dir)?;
            if !summary.trained {
                eprintln!("note: no --labels given, so train and eval were skipped");
            }
            println!(
                "{} posts kept, {} windows, {} domains, {} vectors",
                summary.cleansed_posts,
                summary.windows.len(),
                summary.n_domains,
                summary.vectors
            );
            for r in &summary.models {
                println!(
                    "{}\taccuracy {:.4}\terror {:.4}\tauc {:.4}",
                    r.model, r.accuracy, r.classification_error, r.auc
                );
            }
            pl::write_manifest(&c.output_dir, "pipeline", started)?;
        }
        Command::Report(c) => {
            let s = Settings {
                plots: c.plots,
                ..Settings::default()
            };
            let report = pl::report_phase(&c.output_dir, &s)?;
            println!(
                "{} vectors, {} windows, {} domains",
                report.vectors,
                report.windows.len(),
                report.domains.len()
            );
            for t in &report.top_users {
                println!("{}\t{}\ttotal W {:.4}", t.domain, t.user_id, t.total_w);
            }
            for r in &report.models {
                println!("{}\taccuracy {:.4}\tauc {:.4}", r.model, r.accuracy, r.auc);
            }
            pl::write_manifest(&c.output_dir, "report", started)?;
        }
    }
    Ok(())
}

fn synth(c: SynthCmd) -> Result<()> {
    let mut config = SynthConfig::default();
    if let Some(path) = &c.config {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        config.apply_kv(&text)?;
    }
    let flags: [(&str, Option<String>); 10] = [
        ("n_users", c.users.map(|v| v.to_string())),
        ("n_domains", c.domains.map(|v| v.to_string())),
        (
            "influencer_fraction",
            c.influencer_fraction.map(|v| v.to_string()),
        ),
        (
            "spammer_fraction",
            c.spammer_fraction.map(|v| v.to_string()),
        ),
        ("posts_min", c.posts_min.map(|v| v.to_string())),
        ("posts_max", c.posts_max.map(|v| v.to_string())),
        ("separation", c.separation.map(|v| v.to_string())),
        ("months", c.months.map(|v| v.to_string())),
        ("start", c.start.clone()),
        ("seed", c.seed.map(|v| v.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            config.set(key, &v)?;
        }
    }
    for kv in &c.sets {
        let Some((k, v)) = kv.split_once('=') else {
            bail!(UserError(anyhow::anyhow!(
                "--set expects KEY=VALUE, got {kv:?}"
            )));
        };
        config.set(k.trim(), v.trim())?;
    }
    let out = generate(&config)?;
    match &c.output_dir {
        Some(dir) => {
            out.write_dir(dir)?;
            eprintln!(
                "wrote {} users, {} posts to {}",
                out.dataset.users.len(),
                out.dataset.post_count(),
                dir.display()
            );
        }
        None => {
            let mut w = io::BufWriter::new(io::stdout().lock());
            domaincred::ingest::write_jsonl(&out.dataset, &mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// 1 for bad input or arguments, 2 for broken internal invariants.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<UserError>().is_some() {
            return 1;
        }
        if let Some(core) = cause.downcast_ref::<domaincred::Error>() {
            return if core.is_internal() { 2 } else { 1 };
        }
        if let Some(io) = cause.downcast_ref::<io::Error>() {
            return if io.kind() == io::ErrorKind::BrokenPipe {
                0
            } else {
                1
            };
        }
    }
    2
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            bail!(UserError(anyhow::anyhow!("--threads must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = std::panic::catch_unwind(|| init_threads(cli.threads).and_then(|_| run(cli)));
    match result {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            let code = exit_code(&e);
            if code != 0 {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
        Err(_) => ExitCode::from(2),
    }
}
