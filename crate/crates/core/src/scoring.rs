//! Sentence relevance scoring and threshold extraction.
//!
//! Three scorer rungs produce values in `[0, 1]`: a fixed-weight rule scorer,
//! a trained logistic scorer, and a convex combination of the two. Key
//! segments are the sentences whose score clears the configured threshold.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CleanDocument;
use crate::error::{Error, Result};
use crate::features::{FeatureContext, FeatureVector, FEATURE_NAMES, FEATURE_WIDTH};

/// Fixed rule-scorer weights, one per feature dimension in canonical order.
/// The position dimension enters as `1 - position` and the count dimensions
/// are capped (`lexicon_hits` at 3, `citation_count` at 2) before weighting;
/// the weights sum to 1 so the clamped score stays in `[0, 1]`.
pub const RULE_WEIGHTS: [f64; FEATURE_WIDTH] = [0.20, 0.10, 0.15, 0.05, 0.20, 0.20, 0.10, 0.00];

/// Document-level maxima used to normalize the tf-idf dimensions before
/// rule-based weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleNorms {
    pub tfidf_mean_max: f64,
    pub tfidf_max_max: f64,
}

impl RuleNorms {
    pub fn from_vectors(vectors: &[FeatureVector]) -> RuleNorms {
        RuleNorms {
            tfidf_mean_max: vectors.iter().map(|v| v.tfidf_mean()).fold(0.0, f64::max),
            tfidf_max_max: vectors.iter().map(|v| v.tfidf_max()).fold(0.0, f64::max),
        }
    }

    /// Norms that leave the tf-idf dimensions untouched.
    pub fn identity() -> RuleNorms {
        RuleNorms {
            tfidf_mean_max: 1.0,
            tfidf_max_max: 1.0,
        }
    }
}

fn norm(value: f64, max: f64) -> f64 {
    if max > 0.0 {
        value / max
    } else {
        0.0
    }
}

fn check_finite(fv: &FeatureVector) -> Result<()> {
    match fv.non_finite_dim() {
        Some(dim) => Err(Error::NonFiniteFeature(dim)),
        None => Ok(()),
    }
}

/// Fixed-weight rule score in `[0, 1]`.
pub fn score_rule_based(fv: &FeatureVector, norms: &RuleNorms) -> Result<f64> {
    check_finite(fv)?;
    let transformed = [
        norm(fv.tfidf_mean(), norms.tfidf_mean_max),
        norm(fv.tfidf_max(), norms.tfidf_max_max),
        1.0 - fv.position(),
        fv.rel_length(),
        fv.lexicon_hits().min(3.0) / 3.0,
        fv.citation_count().min(2.0) / 2.0,
        fv.cue_phrase(),
        fv.numeric_density(),
    ];
    let score: f64 = RULE_WEIGHTS
        .iter()
        .zip(transformed.iter())
        .map(|(w, x)| w * x)
        .sum();
    Ok(score.clamp(0.0, 1.0))
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Trained parameters of the supervised scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub weights: [f64; FEATURE_WIDTH],
    pub bias: f64,
    pub feature_names: Vec<String>,
    /// Fingerprint of the dataset the model was trained on.
    pub trained_on: String,
}

/// On-disk model format version.
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    feature_names: Vec<String>,
    weights: Vec<f64>,
    bias: f64,
    trained_on: String,
}

impl ModelParams {
    pub fn new(weights: [f64; FEATURE_WIDTH], bias: f64, trained_on: String) -> ModelParams {
        ModelParams {
            weights,
            bias,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            trained_on,
        }
    }

    /// Linear response `w·fv + b`.
    pub fn response(&self, fv: &FeatureVector) -> f64 {
        self.weights
            .iter()
            .zip(fv.values.iter())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            + self.bias
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    /// Versioned JSON with the feature names embedded.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_VERSION,
            feature_names: self.feature_names.clone(),
            weights: self.weights.to_vec(),
            bias: self.bias,
            trained_on: self.trained_on.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    /// Parse and validate a model file. Rejects version or feature-name
    /// mismatches and non-finite parameters.
    pub fn from_json(json: &str) -> Result<ModelParams> {
        let file: ModelFile =
            serde_json::from_str(json).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        if file.feature_names != FEATURE_NAMES {
            return Err(Error::ModelFormat(format!(
                "feature names do not match the canonical order: {:?}",
                file.feature_names
            )));
        }
        let weights: [f64; FEATURE_WIDTH] = file
            .weights
            .as_slice()
            .try_into()
            .map_err(|_| Error::ModelFormat(format!("expected {FEATURE_WIDTH} weights, got {}", file.weights.len())))?;
        let params = ModelParams {
            weights,
            bias: file.bias,
            feature_names: file.feature_names,
            trained_on: file.trained_on,
        };
        if !params.is_finite() {
            return Err(Error::ModelFormat("non-finite parameter".to_string()));
        }
        Ok(params)
    }
}

/// Logistic score `σ(w·fv + b)` in `(0, 1)`.
pub fn score_supervised(fv: &FeatureVector, params: &ModelParams) -> Result<f64> {
    check_finite(fv)?;
    if !params.is_finite() {
        return Err(Error::NonFiniteFeature("model parameters"));
    }
    Ok(sigmoid(params.response(fv)))
}

/// Convex combination `α·supervised + (1−α)·rule`.
pub fn score_hybrid(
    fv: &FeatureVector,
    params: &ModelParams,
    alpha: f64,
    norms: &RuleNorms,
) -> Result<f64> {
    let sup = score_supervised(fv, params)?;
    let rule = score_rule_based(fv, norms)?;
    Ok(alpha * sup + (1.0 - alpha) * rule)
}

/// Which scorer rung to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerKind {
    Rule,
    Supervised,
    Hybrid,
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerKind::Rule => write!(f, "rule"),
            ScorerKind::Supervised => write!(f, "supervised"),
            ScorerKind::Hybrid => write!(f, "hybrid"),
        }
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ScorerKind> {
        match s {
            "rule" => Ok(ScorerKind::Rule),
            "supervised" => Ok(ScorerKind::Supervised),
            "hybrid" => Ok(ScorerKind::Hybrid),
            other => Err(Error::InvalidConfig(format!("unknown scorer {other:?}"))),
        }
    }
}

/// Threshold-extraction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    /// Relevance threshold θ in `[0, 1]`.
    pub threshold: f64,
    pub scorer_kind: ScorerKind,
    /// Supervised weight α of the hybrid mix, in `[0, 1]`.
    pub hybrid_alpha: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            threshold: 0.5,
            scorer_kind: ScorerKind::Rule,
            hybrid_alpha: 0.6,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) || !self.threshold.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.hybrid_alpha) || !self.hybrid_alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "hybrid alpha must lie in [0, 1], got {}",
                self.hybrid_alpha
            )));
        }
        Ok(())
    }
}

/// One sentence's relevance score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub sentence_index: usize,
    pub score: f64,
    pub scorer_kind: ScorerKind,
}

/// Result of threshold extraction: the key-segment indices plus the full
/// scored list for audit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extraction {
    pub key_indices: BTreeSet<usize>,
    pub scored: Vec<ScoredSentence>,
}

/// Score every sentence of a document with the configured scorer.
pub fn score_document(
    doc: &CleanDocument,
    cfg: &ExtractionConfig,
    params: Option<&ModelParams>,
    ctx: &FeatureContext,
) -> Result<Vec<ScoredSentence>> {
    cfg.validate()?;
    let needs_model = matches!(cfg.scorer_kind, ScorerKind::Supervised | ScorerKind::Hybrid);
    let params = match (needs_model, params) {
        (true, None) => return Err(Error::MissingModel(cfg.scorer_kind.to_string())),
        (_, p) => p,
    };
    let vectors = ctx.extract_all(doc)?;
    let norms = RuleNorms::from_vectors(&vectors);
    vectors
        .iter()
        .enumerate()
        .map(|(i, fv)| {
            let score = match cfg.scorer_kind {
                ScorerKind::Rule => score_rule_based(fv, &norms)?,
                ScorerKind::Supervised => score_supervised(fv, params.unwrap())?,
                ScorerKind::Hybrid => score_hybrid(fv, params.unwrap(), cfg.hybrid_alpha, &norms)?,
            };
            Ok(ScoredSentence {
                sentence_index: i,
                score,
                scorer_kind: cfg.scorer_kind,
            })
        })
        .collect()
}

/// Threshold extraction: `K = { i : score(s_i) ≥ θ }`.
pub fn extract_key_segments(
    doc: &CleanDocument,
    cfg: &ExtractionConfig,
    params: Option<&ModelParams>,
    ctx: &FeatureContext,
) -> Result<Extraction> {
    let scored = score_document(doc, cfg, params, ctx)?;
    let key_indices = scored
        .iter()
        .filter(|s| s.score >= cfg.threshold)
        .map(|s| s.sentence_index)
        .collect();
    Ok(Extraction { key_indices, scored })
}
