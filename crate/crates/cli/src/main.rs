//! Command-line driver for the topic modeling pipeline.
//!
//! Subcommands cover each stage (preprocess, learn, topics, coherence), the
//! whole pipeline, and a seeded synthetic-corpus generator. Every option can
//! also be set in a `key=value` config file; flags win over the file, the
//! file wins over defaults, and the effective configuration is echoed into
//! the output directory.

use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use treetop_core::bow::{build_binary_bow, read_matrix, write_matrix, DocTermMatrix};
use treetop_core::coherence::{average_coherence, write_report, CoherenceParams};
use treetop_core::colloc::{
    preprocess, replace_pairs, ttest_bigrams, write_vocabulary, PreprocessParams, Vocabulary,
};
use treetop_core::corpus::{
    load_corpus, load_stopwords, strip_plurals, tokenize_all, write_corpus_jsonl,
    write_raw_jsonl, Corpus, CorpusFormat, NormalizationConfig,
};
use treetop_core::hlta::{learn_hierarchy, LearnParams};
use treetop_core::ltm::{read_model, write_model, LatentTreeModel, Topic};
use treetop_core::synth::generate_topic_corpus;
use treetop_core::topics::{
    compute_memberships, extract_topics_empirical, hierarchy_from_topics, write_hierarchy,
    write_memberships,
};

#[derive(Parser)]
#[command(
    name = "treetop",
    version,
    about = "Collocation-aware hierarchical topic modeling pipeline",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract collocations, select the vocabulary, and write the rewritten
    /// corpus plus its binary document-term matrix.
    Preprocess(PreprocessCmd),
    /// Learn a latent tree model from a document-term matrix.
    Learn(LearnCmd),
    /// Render the topic hierarchy and per-document topic memberships.
    Topics(TopicsCmd),
    /// Score topic coherence against a document-term matrix.
    Coherence(CoherenceCmd),
    /// Run preprocess, learn, topics, and coherence end to end.
    Pipeline(PipelineCmd),
    /// Generate the seeded synthetic corpus with its ground-truth manifest.
    GenTestcorpus(GenTestcorpusCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Jsonl,
    Textdir,
}

impl FormatArg {
    fn to_core(self) -> CorpusFormat {
        match self {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Textdir => CorpusFormat::TextDir,
        }
    }
}

impl FromStr for FormatArg {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(FormatArg::Jsonl),
            "textdir" => Ok(FormatArg::Textdir),
            other => bail!("unknown corpus format {other:?} (expected jsonl or textdir)"),
        }
    }
}

impl Display for FormatArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FormatArg::Jsonl => "jsonl",
            FormatArg::Textdir => "textdir",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    None,
    Ttest,
}

impl FromStr for BaselineArg {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(BaselineArg::None),
            "ttest" => Ok(BaselineArg::Ttest),
            other => bail!("unknown baseline {other:?} (expected none or ttest)"),
        }
    }
}

impl Display for BaselineArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaselineArg::None => "none",
            BaselineArg::Ttest => "ttest",
        })
    }
}

#[derive(Args)]
struct CommonOpts {
    /// key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all randomized stages.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Force fully sequential execution.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strict_repro: Option<bool>,
}

#[derive(Args)]
struct InputOpts {
    /// Corpus path: a jsonl file or a directory of .txt files.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Corpus layout.
    #[arg(long)]
    format: Option<FormatArg>,
    /// Stopword file overriding the bundled English list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Strip plural 's' when the singular also occurs in the corpus.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    strip_plurals: Option<bool>,
}

#[derive(Args)]
struct SelectOpts {
    /// Vocabulary capacity P.
    #[arg(long)]
    vocab_size: Option<usize>,
    /// Concatenation rounds r; merged tokens span at most 2^r words.
    #[arg(long)]
    rounds: Option<u32>,
    /// Collocation baseline to use instead of the merge loop.
    #[arg(long)]
    baseline: Option<BaselineArg>,
    /// Number of bigrams kept by the t-test baseline.
    #[arg(long)]
    baseline_n: Option<usize>,
}

#[derive(Args)]
struct LearnOpts {
    #[arg(long)]
    max_island_size: Option<usize>,
    #[arg(long)]
    em_restarts: Option<usize>,
    #[arg(long)]
    em_max_iters: Option<usize>,
    #[arg(long)]
    em_tol: Option<f64>,
    #[arg(long)]
    top_level_max_vars: Option<usize>,
}

#[derive(Args)]
struct ScoreOpts {
    /// Top words per topic entering the coherence sum.
    #[arg(long)]
    coherence_m: Option<usize>,
    /// Apply the logarithm per pair term (the log-free sum is the raw ratio).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    log_form: Option<bool>,
}

#[derive(Args)]
struct PreprocessCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    select: SelectOpts,
}

#[derive(Args)]
struct LearnCmd {
    #[command(flatten)]
    common: CommonOpts,
    /// Document-term matrix file (from `preprocess`).
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    learn: LearnOpts,
}

#[derive(Args)]
struct TopicsCmd {
    #[command(flatten)]
    common: CommonOpts,
    /// Model file (from `learn`).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Document-term matrix file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Rank topic words by empirical MI over the matrix instead of model MI.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    empirical_mi: Option<bool>,
}

#[derive(Args)]
struct CoherenceCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[command(flatten)]
    score: ScoreOpts,
}

#[derive(Args)]
struct PipelineCmd {
    #[command(flatten)]
    common: CommonOpts,
    #[command(flatten)]
    input: InputOpts,
    #[command(flatten)]
    select: SelectOpts,
    #[command(flatten)]
    learn: LearnOpts,
    #[command(flatten)]
    score: ScoreOpts,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    empirical_mi: Option<bool>,
}

#[derive(Args)]
struct GenTestcorpusCmd {
    #[command(flatten)]
    common: CommonOpts,
    /// Number of documents to generate.
    #[arg(long)]
    docs: Option<usize>,
}

const KNOWN_KEYS: &[&str] = &[
    "input",
    "format",
    "stopwords",
    "strip_plurals",
    "vocab_size",
    "rounds",
    "baseline",
    "baseline_n",
    "matrix",
    "model",
    "max_island_size",
    "em_restarts",
    "em_max_iters",
    "em_tol",
    "top_level_max_vars",
    "coherence_m",
    "log_form",
    "empirical_mi",
    "seed",
    "threads",
    "strict_repro",
    "docs",
    "out",
];

/// Values from a key=value config file; `#` lines and blanks are ignored.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = line.split_once('=').with_context(|| {
                    format!("{}:{}: expected key=value", path.display(), lineno + 1)
                })?;
                let key = key.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    bail!("{}:{}: unknown config key {key:?}", path.display(), lineno + 1);
                }
                values.insert(key, value.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    fn get<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get_opt(flag, key)?.unwrap_or(default))
    }

    fn get_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => {
                let parsed = raw
                    .parse::<T>()
                    .map_err(|e| anyhow::anyhow!("config key {key}={raw:?}: {e}"))?;
                Ok(Some(parsed))
            }
            None => Ok(None),
        }
    }

    fn get_path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.values.get(key).map(PathBuf::from))
    }
}

/// One resolved key for the provenance echo.
type Echo = (&'static str, String);

fn write_effective_config(out_dir: &Path, entries: &[Echo]) -> Result<()> {
    let mut text = String::new();
    for (key, value) in entries {
        text.push_str(&format!("{key}={value}\n"));
    }
    fs::write(out_dir.join("effective-config.txt"), text)?;
    Ok(())
}

struct CommonSettings {
    out: PathBuf,
    seed: u64,
    threads: Option<usize>,
    strict_repro: bool,
}

impl CommonSettings {
    fn resolve(opts: &CommonOpts, cfg: &ConfigFile) -> Result<Self> {
        let out = cfg
            .get_path(opts.out.clone(), "out")
            .context("missing --out (or out= in the config file)")?;
        Ok(CommonSettings {
            out,
            seed: cfg.get(opts.seed, "seed", 0)?,
            threads: cfg.get_opt(opts.threads, "threads")?,
            strict_repro: cfg.get(opts.strict_repro, "strict_repro", false)?,
        })
    }

    fn echo(&self) -> Vec<Echo> {
        vec![
            ("seed", self.seed.to_string()),
            (
                "threads",
                self.threads
                    .map_or_else(|| "auto".to_string(), |t| t.to_string()),
            ),
            ("strict_repro", self.strict_repro.to_string()),
        ]
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("cannot create output directory {}", self.out.display()))?;
        if let Some(threads) = self.threads {
            // Ignore the error when a pool was already installed (tests call
            // this repeatedly in one process).
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
        Ok(())
    }
}

struct InputSettings {
    input: PathBuf,
    format: FormatArg,
    stopwords: Option<PathBuf>,
    strip_plurals: bool,
}

impl InputSettings {
    fn resolve(opts: &InputOpts, cfg: &ConfigFile) -> Result<Self> {
        Ok(InputSettings {
            input: cfg
                .get_path(opts.input.clone(), "input")
                .context("missing --input (or input= in the config file)")?,
            format: cfg.get(opts.format, "format", FormatArg::Jsonl)?,
            stopwords: cfg.get_path(opts.stopwords.clone(), "stopwords"),
            strip_plurals: cfg.get(opts.strip_plurals, "strip_plurals", false)?,
        })
    }

    fn echo(&self) -> Vec<Echo> {
        vec![
            ("input", self.input.display().to_string()),
            ("format", self.format.to_string()),
            (
                "stopwords",
                self.stopwords
                    .as_ref()
                    .map_or_else(|| "builtin".to_string(), |p| p.display().to_string()),
            ),
            ("strip_plurals", self.strip_plurals.to_string()),
        ]
    }

    fn load(&self, parallel: bool) -> Result<Corpus> {
        let raw = load_corpus(&self.input, self.format.to_core())?;
        let mut norm = NormalizationConfig::new();
        if let Some(path) = &self.stopwords {
            norm.stopwords = load_stopwords(path)?;
        }
        let mut corpus = tokenize_all(&raw, &norm, parallel);
        if self.strip_plurals {
            corpus = strip_plurals(&corpus);
        }
        Ok(corpus)
    }
}

struct SelectSettings {
    vocab_size: usize,
    rounds: u32,
    baseline: BaselineArg,
    baseline_n: usize,
}

impl SelectSettings {
    fn resolve(opts: &SelectOpts, cfg: &ConfigFile) -> Result<Self> {
        let s = SelectSettings {
            vocab_size: cfg.get(opts.vocab_size, "vocab_size", 5000)?,
            rounds: cfg.get(opts.rounds, "rounds", 1)?,
            baseline: cfg.get(opts.baseline, "baseline", BaselineArg::None)?,
            baseline_n: cfg.get(opts.baseline_n, "baseline_n", 1000)?,
        };
        if s.vocab_size == 0 {
            bail!("vocab_size must be at least 1");
        }
        Ok(s)
    }

    fn echo(&self) -> Vec<Echo> {
        vec![
            ("vocab_size", self.vocab_size.to_string()),
            ("rounds", self.rounds.to_string()),
            ("baseline", self.baseline.to_string()),
            ("baseline_n", self.baseline_n.to_string()),
        ]
    }
}

fn resolve_learn_params(
    opts: &LearnOpts,
    cfg: &ConfigFile,
    common: &CommonSettings,
) -> Result<LearnParams> {
    let defaults = LearnParams::default();
    Ok(LearnParams {
        max_island_size: cfg.get(opts.max_island_size, "max_island_size", defaults.max_island_size)?,
        em_restarts: cfg.get(opts.em_restarts, "em_restarts", defaults.em_restarts)?,
        em_max_iters: cfg.get(opts.em_max_iters, "em_max_iters", defaults.em_max_iters)?,
        em_tol: cfg.get(opts.em_tol, "em_tol", defaults.em_tol)?,
        top_level_max_vars: cfg.get(
            opts.top_level_max_vars,
            "top_level_max_vars",
            defaults.top_level_max_vars,
        )?,
        seed: common.seed,
        strict_repro: common.strict_repro,
    })
}

fn learn_echo(params: &LearnParams) -> Vec<Echo> {
    vec![
        ("max_island_size", params.max_island_size.to_string()),
        ("em_restarts", params.em_restarts.to_string()),
        ("em_max_iters", params.em_max_iters.to_string()),
        ("em_tol", params.em_tol.to_string()),
        ("top_level_max_vars", params.top_level_max_vars.to_string()),
    ]
}

fn resolve_score_params(opts: &ScoreOpts, cfg: &ConfigFile) -> Result<CoherenceParams> {
    let defaults = CoherenceParams::default();
    let params = CoherenceParams {
        top_m: cfg.get(opts.coherence_m, "coherence_m", defaults.top_m)?,
        log_form: cfg.get(opts.log_form, "log_form", defaults.log_form)?,
    };
    if params.top_m < 2 {
        bail!("coherence_m must be at least 2");
    }
    Ok(params)
}

fn score_echo(params: &CoherenceParams) -> Vec<Echo> {
    vec![
        ("coherence_m", params.top_m.to_string()),
        ("log_form", params.log_form.to_string()),
    ]
}

/// Run the collocation stage per the configured baseline and return the
/// rewritten corpus and selected vocabulary.
fn run_selection(corpus: &Corpus, select: &SelectSettings) -> (Corpus, Vocabulary) {
    match select.baseline {
        BaselineArg::None => preprocess(
            corpus,
            &PreprocessParams {
                rounds: select.rounds,
                vocab_size: select.vocab_size,
            },
        ),
        BaselineArg::Ttest => {
            // Replace the top-n t-test bigrams as single tokens, then do the
            // plain top-P selection on the rewritten corpus.
            let bigrams = ttest_bigrams(corpus, select.baseline_n);
            let n = bigrams.len();
            let rewritten = replace_pairs(corpus, &Vocabulary::from_ranked(bigrams, n));
            preprocess(
                &rewritten,
                &PreprocessParams {
                    rounds: 0,
                    vocab_size: select.vocab_size,
                },
            )
        }
    }
}

fn write_summary(out: &Path, corpus: &Corpus, vocab: &Vocabulary) -> Result<()> {
    let text = format!(
        "documents\t{}\nvocabulary\t{}\ncollocations\t{}\n",
        corpus.len(),
        vocab.len(),
        vocab.collocation_count()
    );
    fs::write(out.join("summary.txt"), text)?;
    Ok(())
}

struct PreprocessOutput {
    corpus: Corpus,
    vocab: Vocabulary,
    matrix: DocTermMatrix,
}

fn run_preprocess_stage(
    common: &CommonSettings,
    input: &InputSettings,
    select: &SelectSettings,
) -> Result<PreprocessOutput> {
    let corpus = input.load(!common.strict_repro)?;
    let (rewritten, vocab) = run_selection(&corpus, select);
    let matrix = build_binary_bow(&rewritten, &vocab);
    write_vocabulary(&vocab, &common.out.join("vocab.tsv"))?;
    write_corpus_jsonl(&rewritten, &common.out.join("corpus.jsonl"))?;
    write_matrix(&matrix, &common.out.join("matrix.txt"))?;
    write_summary(&common.out, &rewritten, &vocab)?;
    Ok(PreprocessOutput {
        corpus: rewritten,
        vocab,
        matrix,
    })
}

fn run_learn_stage(
    common: &CommonSettings,
    matrix: &DocTermMatrix,
    params: &LearnParams,
) -> Result<LatentTreeModel> {
    let (model, log) = learn_hierarchy(matrix, params)?;
    write_model(&model, &common.out.join("model.json"))?;
    fs::write(common.out.join("learn.log"), log.render())?;
    Ok(model)
}

fn run_topics_stage(
    common: &CommonSettings,
    model: &LatentTreeModel,
    matrix: &DocTermMatrix,
    empirical: bool,
) -> Result<Vec<Topic>> {
    let topics = if empirical {
        extract_topics_empirical(model, matrix)?
    } else {
        model.extract_topics()
    };
    let hierarchy = hierarchy_from_topics(model, topics.clone());
    write_hierarchy(&hierarchy, &common.out.join("hierarchy.txt"))?;
    let memberships = compute_memberships(model, matrix)?;
    write_memberships(&memberships, &common.out.join("memberships.txt"))?;
    Ok(topics)
}

fn run_coherence_stage(
    common: &CommonSettings,
    topics: &[Topic],
    matrix: &DocTermMatrix,
    params: &CoherenceParams,
) -> Result<()> {
    let report = average_coherence(topics, matrix, params)?;
    write_report(&report, &common.out.join("coherence.txt"))?;
    println!(
        "coherence: {} topics included, {} excluded, average {}",
        report.included,
        report.excluded,
        report
            .average
            .map_or_else(|| "n/a".to_string(), |a| format!("{a:.6}"))
    );
    Ok(())
}

fn cmd_preprocess(cmd: PreprocessCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let input = InputSettings::resolve(&cmd.input, &cfg)?;
    let select = SelectSettings::resolve(&cmd.select, &cfg)?;
    common.prepare()?;
    let mut echo = input.echo();
    echo.extend(select.echo());
    echo.extend(common.echo());
    write_effective_config(&common.out, &echo)?;
    let output = run_preprocess_stage(&common, &input, &select)?;
    println!(
        "preprocess: {} documents, vocabulary {}, collocations {}",
        output.corpus.len(),
        output.vocab.len(),
        output.vocab.collocation_count()
    );
    Ok(())
}

fn cmd_learn(cmd: LearnCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let matrix_path = cfg
        .get_path(cmd.matrix.clone(), "matrix")
        .context("missing --matrix (or matrix= in the config file)")?;
    let params = resolve_learn_params(&cmd.learn, &cfg, &common)?;
    common.prepare()?;
    let mut echo = vec![("matrix", matrix_path.display().to_string())];
    echo.extend(learn_echo(&params));
    echo.extend(common.echo());
    write_effective_config(&common.out, &echo)?;
    let matrix = read_matrix(&matrix_path)?;
    let model = run_learn_stage(&common, &matrix, &params)?;
    println!(
        "learn: {} words, {} latent variables, root {}",
        model.word_names().len(),
        model.latent_ids().len(),
        model.root_id()
    );
    Ok(())
}

fn cmd_topics(cmd: TopicsCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let model_path = cfg
        .get_path(cmd.model.clone(), "model")
        .context("missing --model (or model= in the config file)")?;
    let matrix_path = cfg
        .get_path(cmd.matrix.clone(), "matrix")
        .context("missing --matrix (or matrix= in the config file)")?;
    let empirical = cfg.get(cmd.empirical_mi, "empirical_mi", false)?;
    common.prepare()?;
    let echo = vec![
        ("model", model_path.display().to_string()),
        ("matrix", matrix_path.display().to_string()),
        ("empirical_mi", empirical.to_string()),
    ];
    write_effective_config(&common.out, &echo)?;
    let model = read_model(&model_path)?;
    let matrix = read_matrix(&matrix_path)?;
    let topics = run_topics_stage(&common, &model, &matrix, empirical)?;
    println!("topics: {} topics rendered", topics.len());
    Ok(())
}

fn cmd_coherence(cmd: CoherenceCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let model_path = cfg
        .get_path(cmd.model.clone(), "model")
        .context("missing --model (or model= in the config file)")?;
    let matrix_path = cfg
        .get_path(cmd.matrix.clone(), "matrix")
        .context("missing --matrix (or matrix= in the config file)")?;
    let score = resolve_score_params(&cmd.score, &cfg)?;
    common.prepare()?;
    let mut echo = vec![
        ("model", model_path.display().to_string()),
        ("matrix", matrix_path.display().to_string()),
    ];
    echo.extend(score_echo(&score));
    write_effective_config(&common.out, &echo)?;
    let model = read_model(&model_path)?;
    let matrix = read_matrix(&matrix_path)?;
    let topics = model.extract_topics();
    run_coherence_stage(&common, &topics, &matrix, &score)
}

fn cmd_pipeline(cmd: PipelineCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let input = InputSettings::resolve(&cmd.input, &cfg)?;
    let select = SelectSettings::resolve(&cmd.select, &cfg)?;
    let learn = resolve_learn_params(&cmd.learn, &cfg, &common)?;
    let score = resolve_score_params(&cmd.score, &cfg)?;
    let empirical = cfg.get(cmd.empirical_mi, "empirical_mi", false)?;
    common.prepare()?;
    let mut echo = input.echo();
    echo.extend(select.echo());
    echo.extend(learn_echo(&learn));
    echo.extend(score_echo(&score));
    echo.push(("empirical_mi", empirical.to_string()));
    echo.extend(common.echo());
    write_effective_config(&common.out, &echo)?;

    let pre = run_preprocess_stage(&common, &input, &select)?;
    let model = run_learn_stage(&common, &pre.matrix, &learn)?;
    let topics = run_topics_stage(&common, &model, &pre.matrix, empirical)?;
    run_coherence_stage(&common, &topics, &pre.matrix, &score)
}

fn cmd_gen_testcorpus(cmd: GenTestcorpusCmd) -> Result<()> {
    let cfg = ConfigFile::load(cmd.common.config.as_deref())?;
    let common = CommonSettings::resolve(&cmd.common, &cfg)?;
    let docs = cfg.get(cmd.docs, "docs", 200)?;
    common.prepare()?;
    let echo = vec![
        ("docs", docs.to_string()),
        ("seed", common.seed.to_string()),
    ];
    write_effective_config(&common.out, &echo)?;
    let (raw, truth) = generate_topic_corpus(common.seed, docs);
    write_raw_jsonl(&raw, &common.out.join("corpus.jsonl"))?;
    let manifest =
        serde_json::to_string_pretty(&truth).context("manifest serialization")?;
    fs::write(common.out.join("manifest.json"), manifest + "\n")?;
    println!("gen-testcorpus: {docs} documents written");
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Preprocess(cmd) => cmd_preprocess(cmd),
        Command::Learn(cmd) => cmd_learn(cmd),
        Command::Topics(cmd) => cmd_topics(cmd),
        Command::Coherence(cmd) => cmd_coherence(cmd),
        Command::Pipeline(cmd) => cmd_pipeline(cmd),
        Command::GenTestcorpus(cmd) => cmd_gen_testcorpus(cmd),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
