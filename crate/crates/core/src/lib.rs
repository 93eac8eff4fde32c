//! Extractive summarization and key-sentence detection for legal documents.
//!
//! The pipeline: raw documents are cleaned and segmented ([`corpus`]), each
//! sentence is mapped to a fixed-width feature vector ([`features`]), scored
//! for relevance by a rule-based, supervised, or hybrid scorer ([`scoring`]),
//! and the highest-value sentences are selected under an explicit budget
//! ([`summarizer`]). [`training`] fits the supervised scorer and
//! [`evaluation`] measures everything: ROUGE-1/2/L, detection
//! precision/recall/F1, timing, and review-efficiency arithmetic. An
//! optional client for an external chat-completion endpoint lives in
//! [`baseline`], with an offline mock server for tests.
//!
//! Batch operations are document-parallel when the `parallel` feature
//! (default on) is enabled, with identical, deterministically ordered output
//! either way.

pub mod baseline;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod par;
pub mod scoring;
pub mod summarizer;
pub mod training;

pub use corpus::{
    clean, load_dataset, segment_sentences, tokenize, CleanDocument, DatasetFormat, DatasetRecord,
    RawDocument, Sentence,
};
pub use error::{Error, Result};
pub use evaluation::{
    benchmark_run, detection_report, efficiency_gain, percent_change, rouge_l, rouge_n,
    BenchmarkReport, DetectionReport, EfficiencyReport, MethodSpec, Prf, RougeReport,
};
pub use features::{
    build_idf, detect_citations, extract_features, CitationKind, CitationSpan, CueSet,
    FeatureContext, FeatureVector, IdfTable, Lexicon, FEATURE_NAMES, FEATURE_WIDTH,
};
pub use scoring::{
    extract_key_segments, score_hybrid, score_rule_based, score_supervised, Extraction,
    ExtractionConfig, ModelParams, RuleNorms, ScoredSentence, ScorerKind,
};
pub use summarizer::{
    generate_summary, summarize_corpus, summarize_document, summarize_from_extraction, Summary,
    SummaryBudget,
};
pub use training::{train, LabeledDocument, TrainConfig, TrainReport};
