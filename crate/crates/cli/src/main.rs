//! Command-line interface for the summarization pipeline.
//!
//! Data goes to stdout (or `--output`), logs go to stderr. Exit codes are a
//! stable contract: 0 success, 1 fatal configuration or data error, 2 partial
//! failure (some documents errored; details on stderr).

mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use config::FileConfig;
use lexsum_core::baseline::{summarize_remote_batch, LlmConfig};
use lexsum_core::evaluation::{benchmark_run, BenchmarkReport, MethodSpec};
use lexsum_core::features::{build_idf, CueSet, FeatureContext, Lexicon};
use lexsum_core::scoring::{extract_key_segments, ExtractionConfig, ModelParams, ScorerKind};
use lexsum_core::summarizer::{summarize_corpus, SummaryBudget};
use lexsum_core::training::{train, LabeledDocument, TrainConfig};
use lexsum_core::{CleanDocument, DatasetFormat, DatasetRecord};

#[derive(Parser)]
#[command(name = "lexsum", version, about = "Extractive summarization and key-sentence detection for legal documents")]
struct Cli {
    /// TOML config file; defaults to ./lexsum.toml when present
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug); logs go to stderr
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads for document-level parallelism (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Jsonl,
    TextDir,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerArg {
    Rule,
    Supervised,
    Hybrid,
}

impl From<ScorerArg> for ScorerKind {
    fn from(s: ScorerArg) -> ScorerKind {
        match s {
            ScorerArg::Rule => ScorerKind::Rule,
            ScorerArg::Supervised => ScorerKind::Supervised,
            ScorerArg::Hybrid => ScorerKind::Hybrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SummaryFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Args)]
struct InputArgs {
    /// Dataset: a JSONL file or a directory of .txt files
    input: PathBuf,

    /// Input format; inferred from the path when omitted
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
}

#[derive(Args)]
struct ScorerArgs {
    /// Scorer rung
    #[arg(long, value_enum)]
    scorer: Option<ScorerArg>,

    /// Relevance threshold in [0, 1]
    #[arg(long)]
    threshold: Option<f64>,

    /// Supervised weight of the hybrid mix, in [0, 1]
    #[arg(long)]
    alpha: Option<f64>,

    /// Trained model file (required for supervised and hybrid scorers)
    #[arg(long)]
    model: Option<PathBuf>,

    /// Lexicon file (one lowercase term per line, # comments)
    #[arg(long)]
    lexicon: Option<PathBuf>,

    /// Cue-phrase file (same format as the lexicon)
    #[arg(long)]
    cues: Option<PathBuf>,
}

#[derive(Args)]
struct BudgetArgs {
    /// Select the k highest-scoring sentences
    #[arg(long, conflicts_with = "max_tokens")]
    k: Option<usize>,

    /// Token budget for the summary
    #[arg(long)]
    max_tokens: Option<usize>,
}

#[derive(Args)]
struct LlmArgs {
    /// Chat-completion endpoint URL for the abstractive baseline
    #[arg(long)]
    llm_endpoint: Option<String>,

    /// Model name sent to the endpoint
    #[arg(long)]
    llm_model: Option<String>,

    /// Sampling temperature
    #[arg(long)]
    llm_temperature: Option<f64>,

    /// Completion token limit
    #[arg(long)]
    llm_max_tokens: Option<u32>,

    /// Request timeout in seconds
    #[arg(long)]
    llm_timeout: Option<f64>,

    /// Name of the environment variable holding the API key
    #[arg(long)]
    llm_key_env: Option<String>,

    /// Total request attempts per document
    #[arg(long)]
    llm_max_attempts: Option<u32>,

    /// Initial retry backoff in seconds
    #[arg(long)]
    llm_backoff: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, clean and segment a dataset; emit normalized JSONL
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write to this file instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Fit the supervised scorer on a labeled dataset
    Train {
        #[command(flatten)]
        input: InputArgs,
        /// Where to write the model JSON
        #[arg(long)]
        model_out: PathBuf,
        /// Where to write the training report (default: alongside the model)
        #[arg(long)]
        report_out: Option<PathBuf>,
        /// Lexicon file override
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Cue-phrase file override
        #[arg(long)]
        cues: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        learning_rate: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        validation_fraction: Option<f64>,
        #[arg(long)]
        l2: Option<f64>,
    },

    /// Write one summary per document
    Summarize {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Output format
        #[arg(long, value_enum, default_value = "json")]
        format: SummaryFormat,
        /// Write to this file instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Threshold extraction: key-sentence indices and scores per document
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        /// Write to this file instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },

    /// Evaluate one scorer configuration against references and labels
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        scorer: ScorerArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Report format
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        /// Also write the aggregates as CSV to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Compare scorer configurations (and optionally a remote baseline)
    Benchmark {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Comma-separated method list, e.g. "rule,supervised,hybrid"
        #[arg(long)]
        methods: Option<String>,
        /// Trained model file for the supervised and hybrid rungs
        #[arg(long)]
        model: Option<PathBuf>,
        /// Relevance threshold applied to every extractive method
        #[arg(long)]
        threshold: Option<f64>,
        /// Supervised weight of the hybrid mix
        #[arg(long)]
        alpha: Option<f64>,
        /// Lexicon file override
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Cue-phrase file override
        #[arg(long)]
        cues: Option<PathBuf>,
        /// Add an abstractive baseline row via the remote endpoint
        #[arg(long)]
        with_baseline: bool,
        #[command(flatten)]
        llm: LlmArgs,
        /// Report format
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
        /// Also write the aggregates as CSV to this file
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            log::debug!("global thread pool already configured: {e}");
        }
    }

    let file_cfg = match load_file_config(&cli.config) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };

    match run(cli.command, &file_cfg) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load_file_config(flag: &Option<PathBuf>) -> Result<FileConfig, String> {
    if let Some(path) = flag {
        return FileConfig::load(path);
    }
    let default = PathBuf::from("lexsum.toml");
    if default.exists() {
        return FileConfig::load(&default);
    }
    Ok(FileConfig::default())
}

fn run(command: Command, file_cfg: &FileConfig) -> Result<u8, String> {
    match command {
        Command::Ingest { input, output } => cmd_ingest(&input, output.as_deref()),
        Command::Train {
            input,
            model_out,
            report_out,
            lexicon,
            cues,
            seed,
            learning_rate,
            batch_size,
            epochs,
            patience,
            validation_fraction,
            l2,
        } => {
            let cfg = config::resolve_training(
                file_cfg,
                seed,
                learning_rate,
                batch_size,
                epochs,
                patience,
                validation_fraction,
                l2,
            )?;
            let terms = load_terms(file_cfg, &lexicon, &cues)?;
            cmd_train(&input, &model_out, report_out.as_deref(), terms, &cfg)
        }
        Command::Summarize {
            input,
            scorer,
            budget,
            format,
            output,
        } => {
            let cfg = config::resolve_extraction(
                file_cfg,
                scorer.scorer.map(Into::into),
                scorer.threshold,
                scorer.alpha,
            )?;
            let budget = config::resolve_budget(file_cfg, budget.k, budget.max_tokens)?;
            let terms = load_terms(file_cfg, &scorer.lexicon, &scorer.cues)?;
            let params = load_model(&scorer.model, cfg.scorer_kind)?;
            cmd_summarize(&input, &cfg, params, &budget, terms, format, output.as_deref())
        }
        Command::Extract { input, scorer, output } => {
            let cfg = config::resolve_extraction(
                file_cfg,
                scorer.scorer.map(Into::into),
                scorer.threshold,
                scorer.alpha,
            )?;
            let terms = load_terms(file_cfg, &scorer.lexicon, &scorer.cues)?;
            let params = load_model(&scorer.model, cfg.scorer_kind)?;
            cmd_extract(&input, &cfg, params, terms, output.as_deref())
        }
        Command::Evaluate {
            input,
            scorer,
            budget,
            format,
            csv,
        } => {
            let cfg = config::resolve_extraction(
                file_cfg,
                scorer.scorer.map(Into::into),
                scorer.threshold,
                scorer.alpha,
            )?;
            let budget = config::resolve_budget(file_cfg, budget.k, budget.max_tokens)?;
            let terms = load_terms(file_cfg, &scorer.lexicon, &scorer.cues)?;
            let params = load_model(&scorer.model, cfg.scorer_kind)?;
            let methods = vec![MethodSpec::Extractive {
                label: cfg.scorer_kind.to_string(),
                cfg,
                params,
            }];
            let records = load_records(&input)?;
            let report = benchmark_run(&records, &methods, &budget, &terms.0, &terms.1)
                .map_err(|e| e.to_string())?;
            emit_report(&report, format, csv.as_deref())?;
            Ok(0)
        }
        Command::Benchmark {
            input,
            budget,
            methods,
            model,
            threshold,
            alpha,
            lexicon,
            cues,
            with_baseline,
            llm,
            format,
            csv,
        } => {
            let budget = config::resolve_budget(file_cfg, budget.k, budget.max_tokens)?;
            let terms = load_terms(file_cfg, &lexicon, &cues)?;
            cmd_benchmark(
                file_cfg,
                &input,
                &budget,
                methods.as_deref(),
                &model,
                threshold,
                alpha,
                terms,
                with_baseline,
                &llm,
                format,
                csv.as_deref(),
            )
        }
    }
}

fn infer_format(input: &InputArgs) -> DatasetFormat {
    match input.input_format {
        Some(InputFormat::Jsonl) => DatasetFormat::Jsonl,
        Some(InputFormat::TextDir) => DatasetFormat::TextDir,
        None => {
            if input.input.is_dir() {
                DatasetFormat::TextDir
            } else {
                DatasetFormat::Jsonl
            }
        }
    }
}

fn load_records(input: &InputArgs) -> Result<Vec<DatasetRecord>, String> {
    lexsum_core::load_dataset(&input.input, infer_format(input)).map_err(|e| e.to_string())
}

fn load_terms(
    file_cfg: &FileConfig,
    lexicon: &Option<PathBuf>,
    cues: &Option<PathBuf>,
) -> Result<(Lexicon, CueSet), String> {
    let lexicon_path = lexicon.clone().or_else(|| file_cfg.paths.lexicon.clone());
    let cues_path = cues.clone().or_else(|| file_cfg.paths.cue_phrases.clone());
    let lexicon = match lexicon_path {
        Some(p) => Lexicon::from_file(&p).map_err(|e| e.to_string())?,
        None => Lexicon::builtin(),
    };
    let cues = match cues_path {
        Some(p) => CueSet::from_file(&p).map_err(|e| e.to_string())?,
        None => CueSet::builtin(),
    };
    Ok((lexicon, cues))
}

fn load_model(path: &Option<PathBuf>, kind: ScorerKind) -> Result<Option<ModelParams>, String> {
    match path {
        Some(p) => {
            let json = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read model {}: {e}", p.display()))?;
            Ok(Some(ModelParams::from_json(&json).map_err(|e| e.to_string())?))
        }
        None => {
            if matches!(kind, ScorerKind::Supervised | ScorerKind::Hybrid) {
                return Err(format!("scorer {kind} requires --model"));
            }
            Ok(None)
        }
    }
}

/// Build documents, collecting per-document failures instead of aborting.
/// Output is sorted by document id so downstream emission is deterministic.
fn build_docs(records: &[DatasetRecord]) -> (Vec<CleanDocument>, Vec<(String, String)>) {
    let mut docs = Vec::new();
    let mut failures = Vec::new();
    for rec in records {
        match CleanDocument::build(&rec.document) {
            Ok(d) => docs.push(d),
            Err(e) => failures.push((rec.document.id.clone(), e.to_string())),
        }
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    (docs, failures)
}

fn write_output(path: Option<&std::path::Path>, content: &str) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| e.to_string())
        }
    }
}

fn finish_partial(failures: &[(String, String)]) -> u8 {
    if failures.is_empty() {
        return 0;
    }
    for (id, e) in failures {
        eprintln!("document {id}: {e}");
    }
    2
}

fn cmd_ingest(input: &InputArgs, output: Option<&std::path::Path>) -> Result<u8, String> {
    let records = load_records(input)?;
    let mut lines = String::new();
    let mut failures = Vec::new();
    for rec in &records {
        match CleanDocument::build(&rec.document) {
            Ok(doc) => {
                let mut obj = json!({
                    "id": doc.id,
                    "text": doc.text,
                    "sentences": doc.sentences.len(),
                    "tokens": doc.token_count,
                });
                if let Some(s) = &rec.reference_summary {
                    obj["summary"] = json!(s);
                }
                if let Some(labels) = &rec.key_segment_labels {
                    obj["labels"] = json!(labels.iter().collect::<Vec<_>>());
                }
                lines.push_str(&obj.to_string());
                lines.push('\n');
            }
            Err(e) => failures.push((rec.document.id.clone(), e.to_string())),
        }
    }
    write_output(output, &lines)?;
    Ok(finish_partial(&failures))
}

fn cmd_train(
    input: &InputArgs,
    model_out: &std::path::Path,
    report_out: Option<&std::path::Path>,
    (lexicon, cues): (Lexicon, CueSet),
    cfg: &TrainConfig,
) -> Result<u8, String> {
    let records = load_records(input)?;
    let mut data = Vec::new();
    for rec in &records {
        let labels = rec.key_segment_labels.clone().ok_or_else(|| {
            format!(
                "document {:?} has no labels; training needs labeled records",
                rec.document.id
            )
        })?;
        let doc = CleanDocument::build(&rec.document).map_err(|e| e.to_string())?;
        data.push(LabeledDocument::new(doc, labels).map_err(|e| e.to_string())?);
    }
    let corpus: Vec<CleanDocument> = data.iter().map(|d| d.doc.clone()).collect();
    let ctx = FeatureContext::new(build_idf(&corpus).map_err(|e| e.to_string())?, lexicon, cues);
    let (params, report) = train(&data, &ctx, cfg).map_err(|e| e.to_string())?;

    std::fs::write(model_out, params.to_json())
        .map_err(|e| format!("cannot write {}: {e}", model_out.display()))?;
    let report_path = report_out
        .map(PathBuf::from)
        .unwrap_or_else(|| model_out.with_extension("report.json"));
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| format!("cannot write {}: {e}", report_path.display()))?;

    let mut table = String::from("epoch  train_loss  val_loss\n");
    for (i, (t, v)) in report.train_loss.iter().zip(report.val_loss.iter()).enumerate() {
        let marker = if i + 1 == report.best_epoch { "  *best" } else { "" };
        table.push_str(&format!("{:>5}  {:>10.6}  {:>8.6}{}\n", i + 1, t, v, marker));
    }
    table.push_str(&format!(
        "stopped at epoch {}, best epoch {}, model {}\n",
        report.stopped_epoch,
        report.best_epoch,
        model_out.display()
    ));
    write_output(None, &table)?;
    log::info!("model fingerprint {}", report.params_fingerprint);
    Ok(0)
}

fn cmd_summarize(
    input: &InputArgs,
    cfg: &ExtractionConfig,
    params: Option<ModelParams>,
    budget: &SummaryBudget,
    (lexicon, cues): (Lexicon, CueSet),
    format: SummaryFormat,
    output: Option<&std::path::Path>,
) -> Result<u8, String> {
    let records = load_records(input)?;
    let (docs, mut failures) = build_docs(&records);
    if docs.is_empty() {
        for (id, e) in &failures {
            eprintln!("document {id}: {e}");
        }
        return Err("no documents could be processed".to_string());
    }
    let ctx = FeatureContext::new(build_idf(&docs).map_err(|e| e.to_string())?, lexicon, cues);
    let results = summarize_corpus(&docs, cfg, params.as_ref(), budget, &ctx);

    let mut out = String::new();
    for (doc, result) in docs.iter().zip(results) {
        match result {
            Ok(summary) => match format {
                SummaryFormat::Json => {
                    out.push_str(&serde_json::to_string(&summary).unwrap());
                    out.push('\n');
                }
                SummaryFormat::Text => {
                    out.push_str(&format!("{}\t{}\n", summary.doc_id, summary.text));
                }
            },
            Err(e) => failures.push((doc.id.clone(), e.to_string())),
        }
    }
    write_output(output, &out)?;
    Ok(finish_partial(&failures))
}

fn cmd_extract(
    input: &InputArgs,
    cfg: &ExtractionConfig,
    params: Option<ModelParams>,
    (lexicon, cues): (Lexicon, CueSet),
    output: Option<&std::path::Path>,
) -> Result<u8, String> {
    let records = load_records(input)?;
    let (docs, mut failures) = build_docs(&records);
    if docs.is_empty() {
        for (id, e) in &failures {
            eprintln!("document {id}: {e}");
        }
        return Err("no documents could be processed".to_string());
    }
    let ctx = FeatureContext::new(build_idf(&docs).map_err(|e| e.to_string())?, lexicon, cues);
    let mut out = String::new();
    for doc in &docs {
        match extract_key_segments(doc, cfg, params.as_ref(), &ctx) {
            Ok(ex) => {
                let obj = json!({
                    "id": doc.id,
                    "key_indices": ex.key_indices.iter().collect::<Vec<_>>(),
                    "scores": ex.scored,
                });
                out.push_str(&obj.to_string());
                out.push('\n');
            }
            Err(e) => failures.push((doc.id.clone(), e.to_string())),
        }
    }
    write_output(output, &out)?;
    Ok(finish_partial(&failures))
}

fn parse_methods(
    spec: Option<&str>,
    model: &Option<PathBuf>,
    threshold: Option<f64>,
    alpha: Option<f64>,
    file_cfg: &FileConfig,
) -> Result<Vec<MethodSpec>, String> {
    let params = match model {
        Some(p) => {
            let json = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read model {}: {e}", p.display()))?;
            Some(ModelParams::from_json(&json).map_err(|e| e.to_string())?)
        }
        None => None,
    };
    let names: Vec<String> = match spec {
        Some(s) => s
            .split(',')
            .map(|x| x.trim().to_string())
            .filter(|x| !x.is_empty())
            .collect(),
        None => {
            if params.is_some() {
                vec!["rule".into(), "supervised".into(), "hybrid".into()]
            } else {
                vec!["rule".into()]
            }
        }
    };
    let mut methods = Vec::new();
    for name in names {
        let kind: ScorerKind = name.parse().map_err(|e| format!("{e}"))?;
        if matches!(kind, ScorerKind::Supervised | ScorerKind::Hybrid) && params.is_none() {
            return Err(format!("method {kind} requires --model"));
        }
        let cfg = config::resolve_extraction(file_cfg, Some(kind), threshold, alpha)?;
        methods.push(MethodSpec::Extractive {
            label: kind.to_string(),
            cfg,
            params: params.clone(),
        });
    }
    Ok(methods)
}

#[allow(clippy::too_many_arguments)]
fn cmd_benchmark(
    file_cfg: &FileConfig,
    input: &InputArgs,
    budget: &SummaryBudget,
    method_spec: Option<&str>,
    model: &Option<PathBuf>,
    threshold: Option<f64>,
    alpha: Option<f64>,
    (lexicon, cues): (Lexicon, CueSet),
    with_baseline: bool,
    llm: &LlmArgs,
    format: ReportFormat,
    csv: Option<&std::path::Path>,
) -> Result<u8, String> {
    let records = load_records(input)?;
    let mut methods = parse_methods(method_spec, model, threshold, alpha, file_cfg)?;
    let mut partial = false;

    if with_baseline {
        let llm_cfg: LlmConfig = config::resolve_llm(
            file_cfg,
            llm.llm_endpoint.clone(),
            llm.llm_model.clone(),
            llm.llm_temperature,
            llm.llm_max_tokens,
            llm.llm_timeout,
            llm.llm_key_env.clone(),
            llm.llm_max_attempts,
            llm.llm_backoff,
        )?;
        let evaluable: Vec<DatasetRecord> = records.iter().filter(|r| r.is_evaluable()).cloned().collect();
        let (docs, failures) = build_docs(&evaluable);
        partial |= !failures.is_empty();
        log::info!(
            "requesting {} baseline summaries from {}",
            docs.len(),
            llm_cfg.endpoint_url
        );
        let mut summaries = BTreeMap::new();
        for (doc, result) in docs.iter().zip(summarize_remote_batch(&docs, &llm_cfg, 2)) {
            match result {
                Ok(s) => {
                    summaries.insert(s.doc_id.clone(), s.text);
                }
                Err(e) => {
                    eprintln!("baseline failed for {}: {e}", doc.id);
                    partial = true;
                }
            }
        }
        methods.push(MethodSpec::External {
            label: format!("baseline:{}", llm_cfg.model_name),
            summaries,
        });
    }

    let report =
        benchmark_run(&records, &methods, budget, &lexicon, &cues).map_err(|e| e.to_string())?;
    emit_report(&report, format, csv)?;
    Ok(if partial { 2 } else { 0 })
}

fn emit_report(
    report: &BenchmarkReport,
    format: ReportFormat,
    csv: Option<&std::path::Path>,
) -> Result<(), String> {
    let rendered = match format {
        ReportFormat::Json => report.to_json() + "\n",
        ReportFormat::Table => report.to_table(),
    };
    write_output(None, &rendered)?;
    if let Some(path) = csv {
        std::fs::write(path, report.to_csv())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}
