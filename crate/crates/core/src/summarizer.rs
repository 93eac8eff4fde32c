//! Budgeted extractive summary generation.
//!
//! Selection maximizes the sum of sentence scores under an explicit budget:
//! either the k highest-scoring sentences or a greedy fill against a token
//! budget. Ties break toward the lower sentence index and the output always
//! keeps original document order.

use serde::{Deserialize, Serialize};

use crate::corpus::CleanDocument;
use crate::error::{Error, Result};
use crate::features::FeatureContext;
use crate::par;
use crate::scoring::{
    extract_key_segments, ExtractionConfig, Extraction, ModelParams, ScoredSentence,
};

/// Length control for generated summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum SummaryBudget {
    /// Select the `k` highest-scoring sentences.
    TopK { k: usize },
    /// Greedily admit sentences by descending score while the total token
    /// count stays within `max_tokens`; sentences that would overflow are
    /// skipped, not truncated.
    TokenBudget { max_tokens: usize },
}

impl Default for SummaryBudget {
    fn default() -> Self {
        SummaryBudget::TopK { k: 3 }
    }
}

impl SummaryBudget {
    pub fn validate(&self) -> Result<()> {
        let limit = match self {
            SummaryBudget::TopK { k } => *k,
            SummaryBudget::TokenBudget { max_tokens } => *max_tokens,
        };
        if limit == 0 {
            return Err(Error::InvalidConfig("summary budget must be at least 1".into()));
        }
        Ok(())
    }
}

/// One selected sentence with the score that earned its place.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectedSentence {
    pub index: usize,
    pub score: f64,
}

/// An extractive summary of one document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub doc_id: String,
    /// Selected sentences in document order (strictly increasing indices).
    pub selected: Vec<SelectedSentence>,
    /// Selected sentence texts joined by single spaces, in document order.
    pub text: String,
    pub token_count: usize,
    /// True when the threshold filter left no sentences to select from.
    pub empty_pool: bool,
}

/// Pick sentence indices from `pool` under the budget. `pool` entries are
/// `(index, score, token_len)`; the returned indices are sorted.
fn select(pool: &[(usize, f64, usize)], budget: &SummaryBudget) -> Vec<usize> {
    let mut by_score: Vec<&(usize, f64, usize)> = pool.iter().collect();
    // Descending score, ties to the lower index.
    by_score.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));

    let mut chosen: Vec<usize> = match budget {
        SummaryBudget::TopK { k } => {
            let k = (*k).min(pool.len());
            by_score[..k].iter().map(|e| e.0).collect()
        }
        SummaryBudget::TokenBudget { max_tokens } => {
            let mut used = 0usize;
            let mut picked = Vec::new();
            for &&(idx, _, len) in &by_score {
                if used + len <= *max_tokens {
                    used += len;
                    picked.push(idx);
                }
            }
            picked
        }
    };
    chosen.sort_unstable();
    chosen
}

fn assemble(doc: &CleanDocument, indices: &[usize], scores: &[f64], empty_pool: bool) -> Summary {
    let selected: Vec<SelectedSentence> = indices
        .iter()
        .map(|&i| SelectedSentence {
            index: i,
            score: scores[i],
        })
        .collect();
    let text = indices
        .iter()
        .map(|&i| doc.sentences[i].raw.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let token_count = indices.iter().map(|&i| doc.sentences[i].tokens.len()).sum();
    Summary {
        doc_id: doc.id.clone(),
        selected,
        text,
        token_count,
        empty_pool,
    }
}

/// Validate that `scores` covers every sentence exactly once and return the
/// per-index score table.
fn score_table(doc: &CleanDocument, scores: &[ScoredSentence]) -> Result<Vec<f64>> {
    let n = doc.sentences.len();
    let mismatch = || Error::ScoreCoverageMismatch {
        doc_id: doc.id.clone(),
        scored: scores.len(),
        expected: n,
    };
    if scores.len() != n {
        return Err(mismatch());
    }
    let mut table = vec![f64::NAN; n];
    for s in scores {
        if s.sentence_index >= n || !table[s.sentence_index].is_nan() {
            return Err(mismatch());
        }
        table[s.sentence_index] = s.score;
    }
    Ok(table)
}

/// Build a budgeted summary from per-sentence scores.
///
/// Top-k selects the k best sentences (k past the sentence count is clamped,
/// not an error); the token budget greedily admits by descending score and
/// skips anything that would overflow. Output order is document order.
pub fn generate_summary(
    doc: &CleanDocument,
    scores: &[ScoredSentence],
    budget: &SummaryBudget,
) -> Result<Summary> {
    budget.validate()?;
    let table = score_table(doc, scores)?;
    if let SummaryBudget::TopK { k } = budget {
        if *k > doc.sentences.len() {
            log::debug!(
                "top-k budget {} clamped to {} sentences for {}",
                k,
                doc.sentences.len(),
                doc.id
            );
        }
    }
    let pool: Vec<(usize, f64, usize)> = table
        .iter()
        .enumerate()
        .map(|(i, &score)| (i, score, doc.sentences[i].tokens.len()))
        .collect();
    let chosen = select(&pool, budget);
    Ok(assemble(doc, &chosen, &table, false))
}

/// Budgeted selection from an existing extraction: the pool is the
/// threshold-filtered key set, scores are reused without recomputation.
pub fn summarize_from_extraction(
    doc: &CleanDocument,
    extraction: &Extraction,
    budget: &SummaryBudget,
) -> Result<Summary> {
    budget.validate()?;
    let table = score_table(doc, &extraction.scored)?;
    if extraction.key_indices.is_empty() {
        return Ok(assemble(doc, &[], &table, true));
    }
    let pool: Vec<(usize, f64, usize)> = extraction
        .key_indices
        .iter()
        .map(|&i| (i, table[i], doc.sentences[i].tokens.len()))
        .collect();
    let chosen = select(&pool, budget);
    Ok(assemble(doc, &chosen, &table, false))
}

/// End-to-end pipeline for one document: features → scores → threshold
/// filter → budgeted selection. When the threshold leaves fewer sentences
/// than the budget, selection draws only from that pool; an empty pool yields
/// an empty summary flagged `empty_pool`.
pub fn summarize_document(
    doc: &CleanDocument,
    cfg: &ExtractionConfig,
    params: Option<&ModelParams>,
    budget: &SummaryBudget,
    ctx: &FeatureContext,
) -> Result<Summary> {
    budget.validate()?;
    let extraction = extract_key_segments(doc, cfg, params, ctx)?;
    summarize_from_extraction(doc, &extraction, budget)
}

/// Summarize a batch of documents; document-parallel when the `parallel`
/// feature is on, with results in input order regardless.
pub fn summarize_corpus(
    docs: &[CleanDocument],
    cfg: &ExtractionConfig,
    params: Option<&ModelParams>,
    budget: &SummaryBudget,
    ctx: &FeatureContext,
) -> Vec<Result<Summary>> {
    par::map(docs, |doc| summarize_document(doc, cfg, params, budget, ctx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawDocument;
    use crate::features::{build_idf, CueSet, Lexicon};
    use crate::scoring::ScorerKind;

    fn doc(n: usize) -> CleanDocument {
        let text: Vec<String> = (0..n).map(|i| format!("Sentence number {i} stands here.")).collect();
        CleanDocument::build(&RawDocument {
            id: format!("d{n}"),
            text: text.join(" "),
            source_path: String::new(),
        })
        .unwrap()
    }

    fn scored(scores: &[f64]) -> Vec<ScoredSentence> {
        scores
            .iter()
            .enumerate()
            .map(|(i, &score)| ScoredSentence {
                sentence_index: i,
                score,
                scorer_kind: ScorerKind::Rule,
            })
            .collect()
    }

    #[test]
    fn top_k_equal_to_n_keeps_whole_document() {
        let d = doc(4);
        let s = scored(&[0.1, 0.9, 0.3, 0.5]);
        let summary = generate_summary(&d, &s, &SummaryBudget::TopK { k: 4 }).unwrap();
        assert_eq!(summary.selected.len(), 4);
        assert_eq!(summary.text, d.sentences.iter().map(|s| s.raw.clone()).collect::<Vec<_>>().join(" "));
        assert_eq!(summary.token_count, d.token_count);
    }

    #[test]
    fn top_k_clamps_oversized_budget() {
        let d = doc(3);
        let s = scored(&[0.1, 0.9, 0.3]);
        let summary = generate_summary(&d, &s, &SummaryBudget::TopK { k: 10 }).unwrap();
        assert_eq!(summary.selected.len(), 3);
    }

    #[test]
    fn tie_break_prefers_lower_index_and_output_is_document_order() {
        let d = doc(3);
        let s = scored(&[0.9, 0.1, 0.9]);
        let summary = generate_summary(&d, &s, &SummaryBudget::TopK { k: 2 }).unwrap();
        let picked: Vec<usize> = summary.selected.iter().map(|x| x.index).collect();
        assert_eq!(picked, vec![0, 2]);
    }

    #[test]
    fn top_k_matches_exhaustive_subset_search() {
        // Enumeration oracle: the additive objective makes top-k optimal, so
        // the selection must equal the best size-k subset over all C(6,3).
        let d = doc(6);
        let scores = [0.42, 0.17, 0.93, 0.08, 0.55, 0.31];
        let s = scored(&scores);
        let summary = generate_summary(&d, &s, &SummaryBudget::TopK { k: 3 }).unwrap();
        let got: f64 = summary.selected.iter().map(|x| x.score).sum();

        let mut best = f64::NEG_INFINITY;
        for a in 0..6 {
            for b in (a + 1)..6 {
                for c in (b + 1)..6 {
                    best = best.max(scores[a] + scores[b] + scores[c]);
                }
            }
        }
        assert!((got - best).abs() < 1e-12);
    }

    #[test]
    fn token_budget_skips_overflowing_sentences() {
        // All sentences have 5 tokens here; budget 12 admits the two best
        // (10 tokens), skips the third which would hit 15.
        let d = doc(3);
        assert!(d.sentences.iter().all(|s| s.tokens.len() == 5));
        let s = scored(&[0.9, 0.2, 0.8]);
        let summary = generate_summary(&d, &s, &SummaryBudget::TokenBudget { max_tokens: 12 }).unwrap();
        let picked: Vec<usize> = summary.selected.iter().map(|x| x.index).collect();
        assert_eq!(picked, vec![0, 2]);
        assert!(summary.token_count <= 12);
    }

    #[test]
    fn monotone_budget_nesting() {
        let d = doc(6);
        let s = scored(&[0.42, 0.17, 0.93, 0.08, 0.55, 0.31]);
        let mut prev: Vec<usize> = Vec::new();
        for k in 1..=6 {
            let summary = generate_summary(&d, &s, &SummaryBudget::TopK { k }).unwrap();
            let picked: Vec<usize> = summary.selected.iter().map(|x| x.index).collect();
            assert!(prev.iter().all(|i| picked.contains(i)), "k={k} broke nesting");
            prev = picked;
        }
    }

    #[test]
    fn ranking_invariance_under_monotone_transform() {
        let d = doc(5);
        let base = [0.11, 0.73, 0.42, 0.99, 0.27];
        let squared: Vec<f64> = base.iter().map(|x| x * x).collect();
        let a = generate_summary(&d, &scored(&base), &SummaryBudget::TopK { k: 2 }).unwrap();
        let b = generate_summary(&d, &scored(&squared), &SummaryBudget::TopK { k: 2 }).unwrap();
        let idx = |s: &Summary| s.selected.iter().map(|x| x.index).collect::<Vec<_>>();
        assert_eq!(idx(&a), idx(&b));
    }

    #[test]
    fn coverage_mismatch_rejected() {
        let d = doc(3);
        let s = scored(&[0.1, 0.2]);
        assert!(matches!(
            generate_summary(&d, &s, &SummaryBudget::default()),
            Err(Error::ScoreCoverageMismatch { .. })
        ));
        let mut dup = scored(&[0.1, 0.2, 0.3]);
        dup[2].sentence_index = 0;
        assert!(matches!(
            generate_summary(&d, &dup, &SummaryBudget::default()),
            Err(Error::ScoreCoverageMismatch { .. })
        ));
    }

    fn ctx(d: &CleanDocument) -> FeatureContext {
        FeatureContext::new(
            build_idf(std::slice::from_ref(d)).unwrap(),
            Lexicon::builtin(),
            CueSet::builtin(),
        )
    }

    #[test]
    fn pipeline_identity_when_unconstrained() {
        let d = doc(4);
        let c = ctx(&d);
        let cfg = ExtractionConfig {
            threshold: 0.0,
            ..Default::default()
        };
        let summary =
            summarize_document(&d, &cfg, None, &SummaryBudget::TopK { k: 4 }, &c).unwrap();
        assert_eq!(summary.selected.len(), 4);
        assert_eq!(summary.text, d.text);
        assert!(!summary.empty_pool);
    }

    #[test]
    fn pipeline_empty_pool_flagged() {
        let d = doc(4);
        let c = ctx(&d);
        let cfg = ExtractionConfig {
            threshold: 1.0,
            ..Default::default()
        };
        let summary =
            summarize_document(&d, &cfg, None, &SummaryBudget::TopK { k: 2 }, &c).unwrap();
        assert!(summary.empty_pool);
        assert!(summary.selected.is_empty());
        assert_eq!(summary.text, "");
        assert_eq!(summary.token_count, 0);
    }

    #[test]
    fn pipeline_pool_smaller_than_budget() {
        // With a mid threshold the pool may hold fewer sentences than k;
        // selection draws only from the pool.
        let d = doc(5);
        let c = ctx(&d);
        let cfg = ExtractionConfig {
            threshold: 0.0,
            ..Default::default()
        };
        let all = summarize_document(&d, &cfg, None, &SummaryBudget::TopK { k: 5 }, &c).unwrap();
        let thresholds: Vec<f64> = all.selected.iter().map(|s| s.score).collect();
        let mid = thresholds.iter().copied().fold(0.0, f64::max);
        let cfg2 = ExtractionConfig {
            threshold: mid,
            ..Default::default()
        };
        let s = summarize_document(&d, &cfg2, None, &SummaryBudget::TopK { k: 5 }, &c).unwrap();
        assert!(s.selected.len() < 5);
        assert!(s.selected.iter().all(|x| x.score >= mid));
    }

    #[test]
    fn corpus_batch_preserves_order() {
        let docs: Vec<CleanDocument> = (2..6).map(doc).collect();
        let all: Vec<CleanDocument> = docs.clone();
        let c = FeatureContext::new(build_idf(&all).unwrap(), Lexicon::builtin(), CueSet::builtin());
        let cfg = ExtractionConfig {
            threshold: 0.0,
            ..Default::default()
        };
        let out = summarize_corpus(&docs, &cfg, None, &SummaryBudget::TopK { k: 2 }, &c);
        assert_eq!(out.len(), docs.len());
        for (summary, d) in out.iter().zip(docs.iter()) {
            assert_eq!(summary.as_ref().unwrap().doc_id, d.id);
        }
    }
}
