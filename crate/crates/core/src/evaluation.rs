//! Evaluation metrics and the benchmark harness.
//!
//! ROUGE-1/2 use clipped n-gram overlap, ROUGE-L the longest common
//! subsequence over full token sequences; both report precision, recall and
//! the plain harmonic-mean F1. Detection quality compares predicted and gold
//! key-sentence index sets. All metric functions are pure; the benchmark may
//! evaluate documents in parallel but aggregates in document-id order, so
//! everything except wall-clock timings is deterministic.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, CleanDocument, DatasetRecord};
use crate::error::{Error, Result};
use crate::features::{build_idf, CueSet, FeatureContext, Lexicon};
use crate::par;
use crate::scoring::{extract_key_segments, ExtractionConfig, ModelParams};
use crate::summarizer::{summarize_from_extraction, Summary, SummaryBudget};

/// A precision/recall/F1 triple. F1 is 0 when precision + recall is 0 and
/// the harmonic mean otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Prf {
        Prf {
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }
}

pub fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// ROUGE-1/2/L triples for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub rouge1: Prf,
    pub rouge2: Prf,
    pub rouge_l: Prf,
}

pub fn rouge_report(candidate: &[String], reference: &[String]) -> Result<RougeReport> {
    Ok(RougeReport {
        rouge1: rouge_n(candidate, reference, 1)?,
        rouge2: rouge_n(candidate, reference, 2)?,
        rouge_l: rouge_l(candidate, reference)?,
    })
}

/// Clipped n-gram overlap ROUGE-N.
///
/// The match count is `Σ_g min(count_cand(g), count_ref(g))`; recall divides
/// by the reference n-gram count, precision by the candidate's (0 when the
/// candidate has no n-grams).
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> Result<Prf> {
    if n == 0 {
        return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
    }
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    fn count<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], usize> {
        let mut m: HashMap<&[String], usize> = HashMap::new();
        if tokens.len() >= n {
            for g in tokens.windows(n) {
                *m.entry(g).or_insert(0) += 1;
            }
        }
        m
    }
    let cand = count(candidate, n);
    let refs = count(reference, n);
    let matches: usize = cand
        .iter()
        .map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0)))
        .sum();
    let cand_total: usize = cand.values().sum();
    let ref_total: usize = refs.values().sum();
    let precision = if cand_total == 0 {
        0.0
    } else {
        matches as f64 / cand_total as f64
    };
    let recall = if ref_total == 0 {
        0.0
    } else {
        matches as f64 / ref_total as f64
    };
    Ok(Prf::new(precision, recall))
}

/// Length of the longest common subsequence, O(|a|·|b|) dynamic programming.
pub fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Sequence-level ROUGE-L: `p = lcs/|cand|`, `r = lcs/|ref|`.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<Prf> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let lcs = lcs_length(candidate, reference) as f64;
    let precision = if candidate.is_empty() {
        0.0
    } else {
        lcs / candidate.len() as f64
    };
    let recall = lcs / reference.len() as f64;
    Ok(Prf::new(precision, recall))
}

/// Detection quality of a predicted key-segment set against the gold set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub processing_time_s: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl DetectionReport {
    /// Build a report from raw counts. Precision and recall are 0 when their
    /// denominator is 0.
    pub fn from_counts(true_pos: usize, false_pos: usize, false_neg: usize, elapsed_s: f64) -> DetectionReport {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(true_pos, true_pos + false_pos);
        let recall = ratio(true_pos, true_pos + false_neg);
        DetectionReport {
            precision,
            recall,
            f1: f1_of(precision, recall),
            processing_time_s: elapsed_s,
            true_pos,
            false_pos,
            false_neg,
        }
    }

    pub fn prf(&self) -> Prf {
        Prf {
            precision: self.precision,
            recall: self.recall,
            f1: self.f1,
        }
    }
}

/// Compare predicted against gold key-sentence indices for one document of
/// `sentence_count` sentences.
pub fn detection_report(
    predicted: &BTreeSet<usize>,
    gold: &BTreeSet<usize>,
    sentence_count: usize,
    elapsed_s: f64,
) -> Result<DetectionReport> {
    if let Some(&bad) = predicted.union(gold).find(|&&i| i >= sentence_count) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: sentence_count,
        });
    }
    let tp = predicted.intersection(gold).count();
    let fp = predicted.len() - tp;
    let fneg = gold.len() - tp;
    Ok(DetectionReport::from_counts(tp, fp, fneg, elapsed_s))
}

/// Review-time reduction, in percent of the manual time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub t_manual: f64,
    pub t_automated: f64,
    pub gain_percent: f64,
}

/// `gain = (t_manual − t_automated) / t_manual × 100`.
pub fn efficiency_gain(t_manual: f64, t_automated: f64) -> Result<EfficiencyReport> {
    if !(t_manual > 0.0) || !t_manual.is_finite() {
        return Err(Error::NonPositiveManualTime(t_manual));
    }
    if t_automated < 0.0 || !t_automated.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "automated time must be non-negative, got {t_automated}"
        )));
    }
    Ok(EfficiencyReport {
        t_manual,
        t_automated,
        gain_percent: (t_manual - t_automated) / t_manual * 100.0,
    })
}

/// Signed percent change from `before` to `after`.
pub fn percent_change(before: f64, after: f64) -> Result<f64> {
    if before == 0.0 || !before.is_finite() {
        return Err(Error::ZeroBaseline);
    }
    Ok((after - before) / before.abs() * 100.0)
}

/// One method to benchmark.
#[derive(Debug, Clone)]
pub enum MethodSpec {
    /// The extractive pipeline under a scorer configuration.
    Extractive {
        label: String,
        cfg: ExtractionConfig,
        params: Option<ModelParams>,
    },
    /// Externally produced summaries keyed by document id (e.g. from the
    /// baseline client). Detection metrics do not apply.
    External {
        label: String,
        summaries: BTreeMap<String, String>,
    },
}

impl MethodSpec {
    pub fn label(&self) -> &str {
        match self {
            MethodSpec::Extractive { label, .. } => label,
            MethodSpec::External { label, .. } => label,
        }
    }
}

/// Aggregate metrics for one method over the dataset. ROUGE and detection
/// columns are means of the per-document precision and recall, with the row
/// F1 recomputed as their harmonic mean, so every emitted row satisfies
/// `f1 = 2pr/(p+r)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub label: String,
    pub rouge1: Option<Prf>,
    pub rouge2: Option<Prf>,
    pub rouge_l: Option<Prf>,
    pub detection: Option<Prf>,
    pub mean_summary_tokens: Option<f64>,
    /// Mean wall-clock over scoring + selection, milliseconds. Absent for
    /// external methods. Non-deterministic by nature.
    pub mean_processing_ms: Option<f64>,
    pub rouge_docs: usize,
    pub detection_docs: usize,
}

/// Per-document detail kept alongside the aggregates in JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DocOutcome {
    pub doc_id: String,
    pub rouge: Option<RougeReport>,
    pub detection: Option<DetectionReport>,
    pub summary_tokens: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub row: BenchmarkRow,
    pub documents: Vec<DocOutcome>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub budget: SummaryBudget,
    pub documents_evaluated: usize,
    pub documents_skipped: usize,
    pub methods: Vec<MethodOutcome>,
}

struct EvalDoc {
    doc: CleanDocument,
    reference_tokens: Option<Vec<String>>,
    labels: Option<BTreeSet<usize>>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn aggregate_prf(values: &[Prf]) -> Option<Prf> {
    if values.is_empty() {
        return None;
    }
    let p = values.iter().map(|x| x.precision).sum::<f64>() / values.len() as f64;
    let r = values.iter().map(|x| x.recall).sum::<f64>() / values.len() as f64;
    Some(Prf::new(p, r))
}

/// Run every method over the evaluable records of a dataset.
///
/// Records are sorted by document id before evaluation so aggregation order
/// (and therefore every non-timing field) is deterministic. Documents that
/// fail to build are skipped and counted; gold labels out of range are a hard
/// error.
pub fn benchmark_run(
    records: &[DatasetRecord],
    methods: &[MethodSpec],
    budget: &SummaryBudget,
    lexicon: &Lexicon,
    cues: &CueSet,
) -> Result<BenchmarkReport> {
    budget.validate()?;
    let mut docs: Vec<EvalDoc> = Vec::new();
    let mut skipped = 0usize;
    let mut sorted: Vec<&DatasetRecord> = records.iter().filter(|r| r.is_evaluable()).collect();
    sorted.sort_by(|a, b| a.document.id.cmp(&b.document.id));
    for rec in sorted {
        let doc = match CleanDocument::build(&rec.document) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("skipping document {:?}: {e}", rec.document.id);
                skipped += 1;
                continue;
            }
        };
        if let Some(labels) = &rec.key_segment_labels {
            if let Some(&bad) = labels.iter().find(|&&i| i >= doc.sentences.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    len: doc.sentences.len(),
                });
            }
        }
        let reference_tokens = match &rec.reference_summary {
            Some(text) => Some(tokenize(text)?),
            None => None,
        };
        docs.push(EvalDoc {
            doc,
            reference_tokens,
            labels: rec.key_segment_labels.clone(),
        });
    }
    if docs.is_empty() {
        return Err(Error::NoEvaluableRecords);
    }

    let corpus: Vec<CleanDocument> = docs.iter().map(|d| d.doc.clone()).collect();
    let ctx = FeatureContext::new(build_idf(&corpus)?, lexicon.clone(), cues.clone());

    let mut methods_out = Vec::with_capacity(methods.len());
    for method in methods {
        let outcomes: Vec<Result<(DocOutcome, Option<f64>)>> = par::map(&docs, |ed| {
            evaluate_one(ed, method, budget, &ctx)
        });
        let mut documents = Vec::with_capacity(outcomes.len());
        let mut timings = Vec::new();
        for o in outcomes {
            let (doc_outcome, elapsed_ms) = o?;
            if let Some(ms) = elapsed_ms {
                timings.push(ms);
            }
            documents.push(doc_outcome);
        }
        let rouge: Vec<&RougeReport> = documents.iter().filter_map(|d| d.rouge.as_ref()).collect();
        let detection: Vec<Prf> = documents
            .iter()
            .filter_map(|d| d.detection.map(|x| x.prf()))
            .collect();
        let row = BenchmarkRow {
            label: method.label().to_string(),
            rouge1: aggregate_prf(&rouge.iter().map(|r| r.rouge1).collect::<Vec<_>>()),
            rouge2: aggregate_prf(&rouge.iter().map(|r| r.rouge2).collect::<Vec<_>>()),
            rouge_l: aggregate_prf(&rouge.iter().map(|r| r.rouge_l).collect::<Vec<_>>()),
            detection: aggregate_prf(&detection),
            mean_summary_tokens: mean(
                documents
                    .iter()
                    .filter_map(|d| d.summary_tokens.map(|t| t as f64)),
            ),
            mean_processing_ms: mean(timings.iter().copied()),
            rouge_docs: rouge.len(),
            detection_docs: detection.len(),
        };
        methods_out.push(MethodOutcome { row, documents });
    }

    Ok(BenchmarkReport {
        budget: *budget,
        documents_evaluated: docs.len(),
        documents_skipped: skipped,
        methods: methods_out,
    })
}

fn evaluate_one(
    ed: &EvalDoc,
    method: &MethodSpec,
    budget: &SummaryBudget,
    ctx: &FeatureContext,
) -> Result<(DocOutcome, Option<f64>)> {
    match method {
        MethodSpec::Extractive { cfg, params, .. } => {
            let start = Instant::now();
            let extraction = extract_key_segments(&ed.doc, cfg, params.as_ref(), ctx)?;
            let summary: Summary = summarize_from_extraction(&ed.doc, &extraction, budget)?;
            let elapsed = start.elapsed();
            let elapsed_s = elapsed.as_secs_f64();

            let detection = match &ed.labels {
                Some(gold) => Some(detection_report(
                    &extraction.key_indices,
                    gold,
                    ed.doc.sentences.len(),
                    elapsed_s,
                )?),
                None => None,
            };
            let rouge = match &ed.reference_tokens {
                Some(reference) => {
                    let cand = summary_tokens(&ed.doc, &summary);
                    Some(rouge_report(&cand, reference)?)
                }
                None => None,
            };
            Ok((
                DocOutcome {
                    doc_id: ed.doc.id.clone(),
                    rouge,
                    detection,
                    summary_tokens: Some(summary.token_count),
                },
                Some(elapsed_s * 1000.0),
            ))
        }
        MethodSpec::External { summaries, .. } => {
            let rouge = match (&ed.reference_tokens, summaries.get(&ed.doc.id)) {
                (Some(reference), Some(text)) => {
                    let cand = tokenize(text).unwrap_or_default();
                    Some(rouge_report(&cand, reference)?)
                }
                _ => None,
            };
            let summary_tokens = summaries
                .get(&ed.doc.id)
                .map(|text| tokenize(text).map(|t| t.len()).unwrap_or(0));
            Ok((
                DocOutcome {
                    doc_id: ed.doc.id.clone(),
                    rouge,
                    detection: None,
                    summary_tokens,
                },
                None,
            ))
        }
    }
}

fn summary_tokens(doc: &CleanDocument, summary: &Summary) -> Vec<String> {
    summary
        .selected
        .iter()
        .flat_map(|s| doc.sentences[s.index].tokens.iter().cloned())
        .collect()
}

impl BenchmarkReport {
    /// Exact floats, machine-readable.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned text table, 3-decimal rounding.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9}\n",
            "method", "r1-p", "r1-r", "r1-f1", "r2-f1", "rl-f1", "det-p", "det-r", "det-f1", "tokens", "ms/doc", "docs"
        ));
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.3}"),
            None => "-".to_string(),
        };
        for m in &self.methods {
            let r = &m.row;
            out.push_str(&format!(
                "{:<14} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>8} {:>9}\n",
                r.label,
                fmt(r.rouge1.map(|x| x.precision)),
                fmt(r.rouge1.map(|x| x.recall)),
                fmt(r.rouge1.map(|x| x.f1)),
                fmt(r.rouge2.map(|x| x.f1)),
                fmt(r.rouge_l.map(|x| x.f1)),
                fmt(r.detection.map(|x| x.precision)),
                fmt(r.detection.map(|x| x.recall)),
                fmt(r.detection.map(|x| x.f1)),
                fmt(r.mean_summary_tokens),
                fmt(r.mean_processing_ms),
                self.documents_evaluated,
            ));
        }
        out
    }

    /// Comma-separated aggregates, one row per method.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,rouge1_p,rouge1_r,rouge1_f1,rouge2_p,rouge2_r,rouge2_f1,rougeL_p,rougeL_r,rougeL_f1,det_p,det_r,det_f1,mean_tokens,mean_ms,docs\n",
        );
        let cell = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => String::new(),
        };
        for m in &self.methods {
            let r = &m.row;
            let prf = |p: Option<Prf>| {
                format!(
                    "{},{},{}",
                    cell(p.map(|x| x.precision)),
                    cell(p.map(|x| x.recall)),
                    cell(p.map(|x| x.f1))
                )
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.label,
                prf(r.rouge1),
                prf(r.rouge2),
                prf(r.rouge_l),
                prf(r.detection),
                cell(r.mean_summary_tokens),
                cell(r.mean_processing_ms),
                self.documents_evaluated,
            ));
        }
        out
    }
}
