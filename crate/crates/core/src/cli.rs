//! Command-line interface.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::audit::{
    audit, mitigate, render_table, AugmentMode, Generator, LabelSource, MitigationOptions, TableRow,
};
use crate::cfgen::{GenConfig, GenMode};
use crate::corpus::{ingest_corpus, split_corpus, CorpusFormat, Document, IngestOptions};
use crate::error::{Error, Result};
use crate::explain::{
    explain_anchor, explain_local_linear, vocabulary, AntonymLexicon, ExplainerKind, ExplainerSetup,
};
use crate::lexicon::{
    builtin_files, load_lexicon, parse_lexicon_rows, validate_entries, CoherenceMap, Lexicon,
    SensitiveAttribute,
};
use crate::models::{train, Classifier, FeatureMethod, ModelKind, ModelSpec, TrainedModel};
use crate::synthetic::{biased_gender_corpus, random_corpus, BiasedCorpusParams};
use crate::text::ParsedDoc;

#[derive(Debug, Parser)]
#[command(name = "cfaudit", version, about = "Counterfactual fairness auditing for text classifiers")]
struct Cli {
    /// Worker threads for per-document stages.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lexicon maintenance.
    Lexicon {
        #[command(subcommand)]
        action: LexiconAction,
    },
    /// Write counterfactuals of every document as JSONL.
    Generate(GenerateArgs),
    /// Train a classifier and save it as JSON.
    Train(TrainArgs),
    /// Flip-rate report for a classifier.
    Audit(AuditArgs),
    /// Augmentation-retraining with CFI and accuracy drop.
    Mitigate(MitigateArgs),
    /// Per-document explanations.
    Explain(ExplainArgs),
    /// Write a synthetic corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
enum LexiconAction {
    /// Check a lexicon file or directory (the shipped one by default).
    Validate {
        path: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Defaults to the file extension.
    #[arg(long, value_enum)]
    format: Option<CorpusFormat>,
    #[arg(long, default_value = "id")]
    id_column: String,
    #[arg(long, default_value = "text")]
    text_column: String,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Label value mapped to 1; every other value becomes 0.
    #[arg(long)]
    positive_label: Option<String>,
}

#[derive(Debug, Args, Clone)]
struct SeedArgs {
    #[arg(long, env = "CFAUDIT_SEED", default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args, Clone)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenMode::Multi)]
    mode: GenMode,
    /// Comma-separated attributes; all six by default.
    #[arg(long, value_delimiter = ',')]
    attributes: Vec<SensitiveAttribute>,
    #[arg(long, default_value_t = 256)]
    max_cf: usize,
    #[arg(long, default_value_t = 8)]
    max_groups: usize,
    /// Lexicon TSV file or directory of TSV files.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    coherence: Option<PathBuf>,
    #[arg(long)]
    antonyms: Option<PathBuf>,
    /// Directory of `<id>.conllu` parses.
    #[arg(long)]
    conllu_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ExplainerKind::None)]
    explainer: ExplainerKind,
}

#[derive(Debug, Args, Clone)]
struct ModelArgs {
    #[arg(long = "model-kind", value_enum, default_value_t = ModelKind::Logreg)]
    kind: ModelKind,
    #[arg(long, value_enum, default_value_t = FeatureMethod::HashedBagOfWords)]
    features: FeatureMethod,
    #[arg(long, default_value_t = 32)]
    dim: usize,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    gen: GenArgs,
    /// Trained model, needed only with an explainer.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    gen: GenArgs,
    /// Saved model to audit on the whole corpus. Without it a model of
    /// `--model-kind` is trained on the train split and audited on the test split.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MitigateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[command(flatten)]
    gen: GenArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    #[arg(long, value_enum, default_value_t = AugmentMode::Flipped)]
    augment: AugmentMode,
    #[arg(long, value_enum, default_value_t = LabelSource::Gold)]
    label_source: LabelSource,
    /// Run every attribute in both modes and print the comparison table.
    #[arg(long)]
    table: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = ExplainerKind::LocalLinear)]
    explainer: ExplainerKind,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Label tracks the presence of a male word.
    Biased,
    /// Random mixtures of lexicon words and fillers.
    Random,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Biased)]
    kind: SynthKind,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[command(flatten)]
    seed: SeedArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Fully resolved settings echoed into every output.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<GenMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    attributes: Option<Vec<SensitiveAttribute>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    explainer: Option<ExplainerKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_cf: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_groups: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    augment: Option<AugmentMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label_source: Option<LabelSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<f64>,
    paths: BTreeMap<&'static str, String>,
}

impl RunConfig {
    fn new(command: &'static str, seed: u64) -> Self {
        RunConfig {
            command,
            seed,
            mode: None,
            attributes: None,
            explainer: None,
            model: None,
            max_cf: None,
            max_groups: None,
            augment: None,
            label_source: None,
            split: None,
            paths: BTreeMap::new(),
        }
    }

    fn path(mut self, name: &'static str, path: Option<&Path>) -> Self {
        if let Some(p) = path {
            self.paths.insert(name, p.display().to_string());
        }
        self
    }

    fn with_gen(mut self, gen: &GenArgs, config: &GenConfig) -> Self {
        self.mode = Some(config.mode);
        self.attributes = Some(config.attributes.clone());
        self.explainer = Some(gen.explainer);
        self.max_cf = Some(config.max_counterfactuals_per_doc);
        self.max_groups = Some(config.max_groups_per_clause);
        self.path("lexicon", gen.lexicon.as_deref())
            .path("coherence", gen.coherence.as_deref())
            .path("antonyms", gen.antonyms.as_deref())
            .path("conllu_dir", gen.conllu_dir.as_deref())
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 success, 1 usage error, 2 data error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return 1;
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Lexicon {
            action: LexiconAction::Validate { path, output },
        } => lexicon_validate(path.as_deref(), output.as_deref()),
        Command::Generate(args) => generate_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::Audit(args) => audit_cmd(args),
        Command::Mitigate(args) => mitigate_cmd(args),
        Command::Explain(args) => explain_cmd(args),
        Command::Synth(args) => synth_cmd(args),
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
fn write_output(path: Option<&Path>, contents: &str) -> Result<()> {
    let Some(path) = path else {
        let mut out = std::io::stdout().lock();
        return out
            .write_all(contents.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Error::io("<stdout>", e));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn load_corpus(args: &CorpusArgs, require_label: bool) -> Result<Vec<Document>> {
    let format = match args.format {
        Some(f) => f,
        None => CorpusFormat::from_path(&args.corpus).ok_or_else(|| {
            Error::Config(format!(
                "cannot infer the format of {}; pass --format",
                args.corpus.display()
            ))
        })?,
    };
    let opts = IngestOptions {
        id_column: args.id_column.clone(),
        text_column: args.text_column.clone(),
        label_column: args.label_column.clone(),
        require_label,
        positive_label: args.positive_label.clone(),
    };
    ingest_corpus(&args.corpus, format, &opts)
}

fn load_lexicon_arg(gen: &GenArgs) -> Result<Lexicon> {
    let mut lexicon = match &gen.lexicon {
        None => Lexicon::builtin(),
        Some(p) if p.is_dir() => Lexicon::load_dir(p)?,
        Some(p) => {
            let lex = load_lexicon(p)?;
            lex.with_coherence(Lexicon::builtin().coherence().clone())
        }
    };
    if let Some(path) = &gen.coherence {
        lexicon = lexicon.with_coherence(CoherenceMap::load(path)?);
    }
    Ok(lexicon)
}

fn gen_config(gen: &GenArgs, seed: u64) -> Result<GenConfig> {
    let attributes = if gen.attributes.is_empty() {
        SensitiveAttribute::ALL.to_vec()
    } else {
        let mut a = gen.attributes.clone();
        a.sort();
        a.dedup();
        a
    };
    let config = GenConfig {
        attributes,
        mode: gen.mode,
        max_groups_per_clause: gen.max_groups,
        max_counterfactuals_per_doc: gen.max_cf,
        seed,
        filter_enabled: true,
    };
    config.validate()?;
    Ok(config)
}

fn load_parses(dir: Option<&Path>, docs: &[Document]) -> Result<Option<BTreeMap<String, String>>> {
    let Some(dir) = dir else { return Ok(None) };
    if !dir.is_dir() {
        return Err(Error::Config(format!("{} is not a directory", dir.display())));
    }
    let mut parses = BTreeMap::new();
    let mut missing = 0;
    for doc in docs {
        let path = dir.join(format!("{}.conllu", doc.id));
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                parses.insert(doc.id.clone(), text);
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => missing += 1,
            Err(e) => return Err(Error::io(path, e)),
        }
    }
    if missing > 0 {
        log::warn!("{missing} documents have no CoNLL-U parse; using the heuristic segmenter for them");
    }
    Ok(Some(parses))
}

fn explainer_setup(gen: &GenArgs, docs: &[Document]) -> Result<Option<ExplainerSetup>> {
    if gen.explainer == ExplainerKind::None {
        return Ok(None);
    }
    let mut setup = ExplainerSetup::new(gen.explainer);
    if let Some(path) = &gen.antonyms {
        setup.antonyms = AntonymLexicon::load(path)?;
    }
    setup.vocabulary = vocabulary(docs.iter().map(|d| d.text.as_str()));
    Ok(Some(setup))
}

fn model_spec(args: &ModelArgs) -> ModelSpec {
    let mut spec = ModelSpec::new(args.kind);
    spec.features.method = args.features;
    spec.features.dim = args.dim;
    spec
}

fn check_split(split: f64) -> Result<()> {
    if split > 0.0 && split < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("--split must lie in (0, 1), got {split}")))
    }
}

fn lexicon_validate(path: Option<&Path>, output: Option<&Path>) -> Result<i32> {
    let mut sources: Vec<(String, String)> = Vec::new();
    match path {
        None => {
            for (name, text) in builtin_files() {
                sources.push((name.to_string(), text.to_string()));
            }
        }
        Some(p) if p.is_dir() => {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "tsv"))
                .filter(|f| f.file_name().is_some_and(|n| n != "coherence.tsv"))
                .collect();
            files.sort();
            for f in files {
                let text = std::fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
                sources.push((f.display().to_string(), text));
            }
        }
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            sources.push((p.display().to_string(), text));
        }
    }
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (origin, text) in &sources {
        let (rows, errs) = parse_lexicon_rows(text, origin);
        entries.extend(rows);
        errors.extend(errs.into_iter().map(|e| e.to_string()));
    }
    let mut report = validate_entries(&entries);
    errors.append(&mut report.errors);
    let mut counts: BTreeMap<SensitiveAttribute, usize> = BTreeMap::new();
    for e in &entries {
        *counts.entry(e.attribute).or_default() += 1;
    }
    #[derive(Serialize)]
    struct Out<'a> {
        run_config: RunConfig,
        ok: bool,
        rows: usize,
        per_attribute: BTreeMap<SensitiveAttribute, usize>,
        errors: &'a [String],
        advisories: &'a [String],
    }
    let out = Out {
        run_config: RunConfig::new("lexicon validate", 0).path("lexicon", path),
        ok: errors.is_empty(),
        rows: entries.len(),
        per_attribute: counts,
        errors: &errors,
        advisories: &report.advisories,
    };
    write_output(output, &to_json(&out)?)?;
    for e in &errors {
        eprintln!("error: {e}");
    }
    Ok(if errors.is_empty() { 0 } else { 2 })
}

#[derive(Serialize)]
struct CfRecord<'a> {
    parent_id: &'a str,
    text: &'a str,
    flipped_attributes: &'a [String],
    substitutions: &'a [crate::cfgen::Substitution],
}

fn generate_cmd(args: GenerateArgs) -> Result<i32> {
    use rayon::prelude::*;
    let docs = load_corpus(&args.corpus, false)?;
    let lexicon = load_lexicon_arg(&args.gen)?;
    let config = gen_config(&args.gen, args.seed.seed)?;
    let parses = load_parses(args.gen.conllu_dir.as_deref(), &docs)?;
    let setup = explainer_setup(&args.gen, &docs)?;
    let model = match (&setup, &args.model) {
        (Some(_), None) => {
            return Err(Error::Config("--explainer needs --model".into()));
        }
        (_, Some(path)) => Some(TrainedModel::load(path)?),
        (None, None) => None,
    };
    let constant = |_: &str| 0.5;
    let classifier: &dyn Classifier = match &model {
        Some(m) => m,
        None => &constant,
    };
    let gen = Generator {
        lexicon: &lexicon,
        config: &config,
        explainer: setup.as_ref(),
        parses: parses.as_ref(),
        filter: None,
    };
    let per_doc: Vec<Vec<crate::cfgen::Counterfactual>> = docs
        .par_iter()
        .map(|d| gen.counterfactuals(d, classifier))
        .collect::<Result<_>>()?;

    let run_config = RunConfig::new("generate", config.seed)
        .with_gen(&args.gen, &config)
        .path("corpus", Some(&args.corpus.corpus))
        .path("model", args.model.as_deref())
        .path("output", args.output.as_deref());
    let mut out = serde_json::to_string(&serde_json::json!({ "run_config": run_config }))?;
    out.push('\n');
    for cf in per_doc.iter().flatten() {
        let record = CfRecord {
            parent_id: &cf.parent_id,
            text: &cf.text,
            flipped_attributes: &cf.flipped_attributes,
            substitutions: &cf.substitutions,
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)?;
    Ok(0)
}

fn train_cmd(args: TrainArgs) -> Result<i32> {
    let docs = load_corpus(&args.corpus, true)?;
    let spec = model_spec(&args.model);
    let model = train(&docs, &spec, args.seed.seed)?;
    write_output(Some(&args.output), &model.to_json()?)?;
    Ok(0)
}

fn audit_cmd(args: AuditArgs) -> Result<i32> {
    let docs = load_corpus(&args.corpus, args.model.is_none())?;
    let lexicon = load_lexicon_arg(&args.gen)?;
    let config = gen_config(&args.gen, args.seed.seed)?;
    let mut run_config = RunConfig::new("audit", config.seed)
        .with_gen(&args.gen, &config)
        .path("corpus", Some(&args.corpus.corpus))
        .path("model", args.model.as_deref())
        .path("output", args.output.as_deref());
    let (model, audited) = match &args.model {
        Some(path) => (TrainedModel::load(path)?, docs),
        None => {
            check_split(args.split)?;
            let (train_docs, test_docs) = split_corpus(&docs, args.split, config.seed)?;
            run_config.split = Some(args.split);
            run_config.model = Some(args.model_args.kind.as_str().to_string());
            (train(&train_docs, &model_spec(&args.model_args), config.seed)?, test_docs)
        }
    };
    let parses = load_parses(args.gen.conllu_dir.as_deref(), &audited)?;
    let setup = explainer_setup(&args.gen, &audited)?;
    let gen = Generator {
        lexicon: &lexicon,
        config: &config,
        explainer: setup.as_ref(),
        parses: parses.as_ref(),
        filter: None,
    };
    let report = audit(&model, &audited, &gen)?;
    #[derive(Serialize)]
    struct Out {
        run_config: RunConfig,
        #[serde(flatten)]
        report: crate::audit::AuditReport,
    }
    write_output(args.output.as_deref(), &to_json(&Out { run_config, report })?)?;
    Ok(0)
}

fn mitigate_cmd(args: MitigateArgs) -> Result<i32> {
    check_split(args.split)?;
    let docs = load_corpus(&args.corpus, true)?;
    let lexicon = load_lexicon_arg(&args.gen)?;
    let config = gen_config(&args.gen, args.seed.seed)?;
    let (train_docs, test_docs) = split_corpus(&docs, args.split, config.seed)?;
    let parses = load_parses(args.gen.conllu_dir.as_deref(), &docs)?;
    let setup = explainer_setup(&args.gen, &docs)?;
    let spec = model_spec(&args.model_args);
    let opts = MitigationOptions {
        augment: args.augment,
        label_source: args.label_source,
        seed: config.seed,
        cross_eval: true,
    };
    let mut run_config = RunConfig::new("mitigate", config.seed)
        .with_gen(&args.gen, &config)
        .path("corpus", Some(&args.corpus.corpus))
        .path("output", args.output.as_deref());
    run_config.model = Some(args.model_args.kind.as_str().to_string());
    run_config.augment = Some(args.augment);
    run_config.label_source = Some(args.label_source);
    run_config.split = Some(args.split);

    let run = |config: &GenConfig| {
        let gen = Generator {
            lexicon: &lexicon,
            config,
            explainer: setup.as_ref(),
            parses: parses.as_ref(),
            filter: None,
        };
        mitigate(&train_docs, &test_docs, &spec, &gen, &opts)
    };

    if !args.table {
        let report = run(&config)?;
        #[derive(Serialize)]
        struct Out {
            run_config: RunConfig,
            #[serde(flatten)]
            report: crate::audit::MitigationReport,
        }
        write_output(args.output.as_deref(), &to_json(&Out { run_config, report })?)?;
        return Ok(0);
    }

    let mut rows = Vec::new();
    for &attr in &config.attributes {
        let one = config.with_attributes(vec![attr]);
        let single = match run(&one.with_mode(GenMode::Single)) {
            Ok(r) => r,
            Err(Error::Corpus(msg)) => {
                log::warn!("skipping {attr}: {msg}");
                continue;
            }
            Err(e) => return Err(e),
        };
        let multi = run(&one.with_mode(GenMode::Multi))?;
        rows.push(TableRow {
            attribute: attr.to_string(),
            single,
            multi,
        });
    }
    #[derive(Serialize)]
    struct Out {
        run_config: RunConfig,
        rows: Vec<TableRow>,
        table: String,
    }
    let table = render_table(&rows);
    if args.output.is_some() {
        print!("{table}");
    }
    write_output(args.output.as_deref(), &to_json(&Out { run_config, rows, table })?)?;
    Ok(0)
}

fn explain_cmd(args: ExplainArgs) -> Result<i32> {
    use rayon::prelude::*;
    let docs = load_corpus(&args.corpus, false)?;
    let model = TrainedModel::load(&args.model)?;
    let seed = args.seed.seed;
    let vocab = vocabulary(docs.iter().map(|d| d.text.as_str()));
    let mut setup = ExplainerSetup::new(args.explainer);
    setup.local_linear.n_samples = args.samples;
    setup.local_linear.top_k = args.top_k;

    #[derive(Serialize)]
    struct Item {
        token_index: usize,
        token: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        weight: Option<f64>,
    }
    #[derive(Serialize)]
    struct DocExplanation {
        id: String,
        prediction: u8,
        tokens: Vec<Item>,
        #[serde(skip_serializing_if = "Option::is_none")]
        precision: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        below_threshold: Option<bool>,
        #[serde(skip_serializing_if = "Option::is_none")]
        skipped: Option<String>,
    }
    let items: Vec<DocExplanation> = docs
        .par_iter()
        .map(|doc| {
            let parsed = ParsedDoc::parse(&doc.text);
            let token = |i: usize| parsed.tokens[i].text.clone();
            let doc_seed = crate::seed::derive_seed(seed, &doc.id);
            let mut out = DocExplanation {
                id: doc.id.clone(),
                prediction: model.predict(&doc.text),
                tokens: Vec::new(),
                precision: None,
                below_threshold: None,
                skipped: None,
            };
            let result = match args.explainer {
                ExplainerKind::None => Ok(()),
                ExplainerKind::LocalLinear => {
                    explain_local_linear(&model, &doc.text, &setup.local_linear, doc_seed).map(|e| {
                        out.tokens = e
                            .weights
                            .iter()
                            .map(|&(i, w)| Item { token_index: i, token: token(i), weight: Some(w) })
                            .collect();
                    })
                }
                ExplainerKind::Anchor => {
                    explain_anchor(&model, &doc.text, &vocab, &setup.anchor, doc_seed).map(|a| {
                        out.tokens = a
                            .token_indices
                            .iter()
                            .map(|&i| Item { token_index: i, token: token(i), weight: None })
                            .collect();
                        out.precision = Some(a.precision);
                        out.below_threshold = Some(a.below_threshold);
                    })
                }
            };
            match result {
                Ok(()) => Ok(out),
                Err(Error::Explain(msg)) => {
                    out.skipped = Some(msg);
                    Ok(out)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut run_config = RunConfig::new("explain", seed)
        .path("corpus", Some(&args.corpus.corpus))
        .path("model", Some(&args.model))
        .path("output", args.output.as_deref());
    run_config.explainer = Some(args.explainer);
    #[derive(Serialize)]
    struct Out {
        run_config: RunConfig,
        explanations: Vec<DocExplanation>,
    }
    write_output(args.output.as_deref(), &to_json(&Out { run_config, explanations: items })?)?;
    Ok(0)
}

fn synth_cmd(args: SynthArgs) -> Result<i32> {
    if args.n == 0 {
        return Err(Error::Config("--n must be positive".into()));
    }
    let docs = match args.kind {
        SynthKind::Biased => biased_gender_corpus(&BiasedCorpusParams {
            n_docs: args.n,
            seed: args.seed.seed,
            ..Default::default()
        }),
        SynthKind::Random => {
            let mut rng = crate::seed::rng_for(args.seed.seed, "random-corpus");
            random_corpus(&mut rng, &Lexicon::builtin(), args.n)
        }
    };
    let mut out = String::new();
    for d in &docs {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    write_output(args.output.as_deref(), &out)?;
    Ok(0)
}
