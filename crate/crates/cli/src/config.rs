//! Layered configuration: built-in defaults, then the TOML config file, then
//! command-line flags. Every value is validated before any work starts.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use lexsum_core::baseline::LlmConfig;
use lexsum_core::scoring::{ExtractionConfig, ScorerKind};
use lexsum_core::summarizer::SummaryBudget;
use lexsum_core::training::TrainConfig;

/// Optional overrides parsed from the TOML config file. Sections mirror the
/// module names; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub extraction: ExtractionSection,
    #[serde(default)]
    pub training: TrainingSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(default)]
    pub llm: LlmSection,
    #[serde(default)]
    pub paths: PathsSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionSection {
    pub threshold: Option<f64>,
    pub scorer: Option<String>,
    pub hybrid_alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub seed: Option<u64>,
    pub l2: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub k: Option<usize>,
    pub max_tokens: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub timeout_s: Option<f64>,
    pub api_key_env_var: Option<String>,
    pub max_attempts: Option<u32>,
    pub backoff_initial_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub lexicon: Option<PathBuf>,
    pub cue_phrases: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, String> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&content).map_err(|e| format!("invalid config {}: {e}", path.display()))
    }
}

fn apply<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Resolve the extraction settings: defaults ← config file ← flags.
pub fn resolve_extraction(
    file: &FileConfig,
    scorer: Option<ScorerKind>,
    threshold: Option<f64>,
    alpha: Option<f64>,
) -> Result<ExtractionConfig, String> {
    let mut cfg = ExtractionConfig::default();
    if let Some(name) = &file.extraction.scorer {
        cfg.scorer_kind = name.parse().map_err(|e| format!("{e}"))?;
    }
    apply(&mut cfg.threshold, file.extraction.threshold);
    apply(&mut cfg.hybrid_alpha, file.extraction.hybrid_alpha);
    apply(&mut cfg.scorer_kind, scorer);
    apply(&mut cfg.threshold, threshold);
    apply(&mut cfg.hybrid_alpha, alpha);
    cfg.validate().map_err(|e| format!("{e}"))?;
    Ok(cfg)
}

pub fn resolve_training(
    file: &FileConfig,
    seed: Option<u64>,
    learning_rate: Option<f64>,
    batch_size: Option<usize>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    validation_fraction: Option<f64>,
    l2: Option<f64>,
) -> Result<TrainConfig, String> {
    let mut cfg = TrainConfig::default();
    let t = &file.training;
    apply(&mut cfg.learning_rate, t.learning_rate);
    apply(&mut cfg.batch_size, t.batch_size);
    apply(&mut cfg.max_epochs, t.max_epochs);
    apply(&mut cfg.patience, t.patience);
    apply(&mut cfg.validation_fraction, t.validation_fraction);
    apply(&mut cfg.seed, t.seed);
    apply(&mut cfg.l2, t.l2);
    apply(&mut cfg.learning_rate, learning_rate);
    apply(&mut cfg.batch_size, batch_size);
    apply(&mut cfg.max_epochs, max_epochs);
    apply(&mut cfg.patience, patience);
    apply(&mut cfg.validation_fraction, validation_fraction);
    apply(&mut cfg.seed, seed);
    apply(&mut cfg.l2, l2);
    cfg.validate().map_err(|e| format!("{e}"))?;
    Ok(cfg)
}

/// Resolve the summary budget. `--k` and `--max-tokens` are mutually
/// exclusive at the flag level; in the file, `max_tokens` wins over `k`.
pub fn resolve_budget(
    file: &FileConfig,
    k: Option<usize>,
    max_tokens: Option<usize>,
) -> Result<SummaryBudget, String> {
    let mut budget = SummaryBudget::default();
    if let Some(k) = file.budget.k {
        budget = SummaryBudget::TopK { k };
    }
    if let Some(m) = file.budget.max_tokens {
        budget = SummaryBudget::TokenBudget { max_tokens: m };
    }
    if let Some(k) = k {
        budget = SummaryBudget::TopK { k };
    }
    if let Some(m) = max_tokens {
        budget = SummaryBudget::TokenBudget { max_tokens: m };
    }
    budget.validate().map_err(|e| format!("{e}"))?;
    Ok(budget)
}

#[allow(clippy::too_many_arguments)]
pub fn resolve_llm(
    file: &FileConfig,
    endpoint: Option<String>,
    model: Option<String>,
    temperature: Option<f64>,
    max_tokens: Option<u32>,
    timeout: Option<f64>,
    key_env: Option<String>,
    max_attempts: Option<u32>,
    backoff: Option<f64>,
) -> Result<LlmConfig, String> {
    let mut cfg = LlmConfig::default();
    let l = &file.llm;
    apply(&mut cfg.endpoint_url, l.endpoint_url.clone());
    apply(&mut cfg.model_name, l.model_name.clone());
    apply(&mut cfg.temperature, l.temperature);
    apply(&mut cfg.max_output_tokens, l.max_output_tokens);
    apply(&mut cfg.timeout_s, l.timeout_s);
    apply(&mut cfg.api_key_env_var, l.api_key_env_var.clone());
    apply(&mut cfg.max_attempts, l.max_attempts);
    apply(&mut cfg.backoff_initial_s, l.backoff_initial_s);
    apply(&mut cfg.endpoint_url, endpoint);
    apply(&mut cfg.model_name, model);
    apply(&mut cfg.temperature, temperature);
    apply(&mut cfg.max_output_tokens, max_tokens);
    apply(&mut cfg.timeout_s, timeout);
    apply(&mut cfg.api_key_env_var, key_env);
    apply(&mut cfg.max_attempts, max_attempts);
    apply(&mut cfg.backoff_initial_s, backoff);
    cfg.validate().map_err(|e| format!("{e}"))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let file: FileConfig = toml::from_str(
            r#"
            [extraction]
            threshold = 0.3
            scorer = "hybrid"

            [budget]
            k = 5
            "#,
        )
        .unwrap();
        let cfg = resolve_extraction(&file, None, Some(0.7), None).unwrap();
        assert_eq!(cfg.threshold, 0.7);
        assert_eq!(cfg.scorer_kind, ScorerKind::Hybrid);
        assert_eq!(cfg.hybrid_alpha, 0.6);

        let budget = resolve_budget(&file, None, None).unwrap();
        assert_eq!(budget, SummaryBudget::TopK { k: 5 });
        let budget = resolve_budget(&file, None, Some(100)).unwrap();
        assert_eq!(budget, SummaryBudget::TokenBudget { max_tokens: 100 });
    }

    #[test]
    fn invalid_values_rejected_at_resolution() {
        let file = FileConfig::default();
        assert!(resolve_extraction(&file, None, Some(1.5), None).is_err());
        assert!(resolve_budget(&file, Some(0), None).is_err());
        let bad: Result<FileConfig, _> = toml::from_str("[extraction]\nunknown_key = 1\n");
        assert!(bad.is_err());
    }

    #[test]
    fn training_merge_precedence() {
        let file: FileConfig = toml::from_str("[training]\nseed = 7\nbatch_size = 8\n").unwrap();
        let cfg =
            resolve_training(&file, Some(99), None, None, None, None, None, None).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.batch_size, 8);
        assert_eq!(cfg.max_epochs, 10);
        assert_eq!(cfg.patience, 3);
        assert_eq!(cfg.learning_rate, 0.1);
    }
}
