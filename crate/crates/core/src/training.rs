//! Supervised scorer training.
//!
//! Fits the logistic scorer by mini-batch gradient descent on binary
//! cross-entropy with l2 regularization, early-stopping on validation loss.
//! The validation split is by document, never by sentence, so no document
//! contributes examples to both partitions. Given the same seed the whole
//! procedure is bit-for-bit deterministic.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CleanDocument;
use crate::error::{Error, Result};
use crate::features::{FeatureContext, FeatureVector, FEATURE_WIDTH};
use crate::par;
use crate::scoring::{sigmoid, ModelParams};

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many consecutive epochs without validation improvement.
    pub patience: usize,
    /// Fraction of documents held out for validation, in (0, 1).
    pub validation_fraction: f64,
    pub seed: u64,
    /// l2 penalty coefficient; the loss adds `l2/2 · ‖w‖²`.
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            batch_size: 16,
            max_epochs: 10,
            patience: 3,
            validation_fraction: 0.2,
            seed: 42,
            l2: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::InvalidConfig(
                "batch size, epochs and patience must be at least 1".into(),
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "validation fraction must lie in (0, 1)".into(),
            ));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::InvalidConfig("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// A document paired with its gold key-sentence indices.
#[derive(Debug, Clone)]
pub struct LabeledDocument {
    pub doc: CleanDocument,
    pub labels: BTreeSet<usize>,
}

impl LabeledDocument {
    /// Pair a document with labels, rejecting out-of-range indices.
    pub fn new(doc: CleanDocument, labels: BTreeSet<usize>) -> Result<LabeledDocument> {
        if let Some(&bad) = labels.iter().find(|&&i| i >= doc.sentences.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                len: doc.sentences.len(),
            });
        }
        Ok(LabeledDocument { doc, labels })
    }
}

/// One training example: feature vector and binary label.
#[derive(Debug, Clone, Copy)]
pub struct Example {
    pub features: FeatureVector,
    pub label: f64,
}

/// Probability clamp applied before the logs in the loss.
const PROB_CLAMP: f64 = 1e-12;

/// Mean binary cross-entropy over the batch plus `l2/2 · ‖w‖²`.
pub fn loss(params: &ModelParams, batch: &[Example], l2: f64) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for ex in batch {
        let p = sigmoid(params.response(&ex.features)).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total += -(ex.label * p.ln() + (1.0 - ex.label) * (1.0 - p).ln());
    }
    let penalty = 0.5 * l2 * params.weights.iter().map(|w| w * w).sum::<f64>();
    Ok(total / batch.len() as f64 + penalty)
}

/// Analytic gradient of [`loss`]: mean of `(ŷ − y)·fv` plus `l2·w` for the
/// weights, mean of `(ŷ − y)` for the bias.
pub fn gradient(params: &ModelParams, batch: &[Example], l2: f64) -> Result<([f64; FEATURE_WIDTH], f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grad_w = [0.0; FEATURE_WIDTH];
    let mut grad_b = 0.0;
    for ex in batch {
        let err = sigmoid(params.response(&ex.features)) - ex.label;
        for (g, x) in grad_w.iter_mut().zip(ex.features.values.iter()) {
            *g += err * x;
        }
        grad_b += err;
    }
    let n = batch.len() as f64;
    for (g, w) in grad_w.iter_mut().zip(params.weights.iter()) {
        *g = *g / n + l2 * w;
    }
    Ok((grad_w, grad_b / n))
}

/// Per-run training trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch at which training stopped.
    pub stopped_epoch: usize,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
    pub params_fingerprint: String,
    pub train_doc_ids: Vec<String>,
    pub val_doc_ids: Vec<String>,
}

/// Early-stopping state: stop after `patience` consecutive epochs without a
/// strict improvement of the validation loss.
pub(crate) struct EarlyStopping {
    patience: usize,
    best: f64,
    pub best_epoch: usize,
    streak: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> EarlyStopping {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            streak: 0,
        }
    }

    /// Record one epoch's validation loss; true means stop now.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.streak = 0;
            false
        } else {
            self.streak += 1;
            self.streak >= self.patience
        }
    }

    pub fn improved_at(&self, epoch: usize) -> bool {
        self.best_epoch == epoch
    }
}

fn dataset_fingerprint(data: &[LabeledDocument]) -> String {
    let mut hasher = Sha256::new();
    for ld in data {
        hasher.update(ld.doc.id.as_bytes());
        hasher.update([0u8]);
        hasher.update(ld.doc.token_count.to_le_bytes());
        for &i in &ld.labels {
            hasher.update(i.to_le_bytes());
        }
        hasher.update([0xff]);
    }
    hex(&hasher.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn params_fingerprint(params: &ModelParams) -> String {
    hex(&Sha256::digest(params.to_json().as_bytes()))
}

fn examples_for(docs: &[&LabeledDocument], ctx: &FeatureContext) -> Result<Vec<Example>> {
    let per_doc: Vec<Result<Vec<Example>>> = par::map(docs, |ld| {
        let vectors = ctx.extract_all(&ld.doc)?;
        Ok(vectors
            .into_iter()
            .enumerate()
            .map(|(i, features)| Example {
                features,
                label: if ld.labels.contains(&i) { 1.0 } else { 0.0 },
            })
            .collect())
    });
    let mut out = Vec::new();
    for r in per_doc {
        out.extend(r?);
    }
    Ok(out)
}

/// Fit the supervised scorer.
///
/// Deterministic given the seed: the document split and the per-epoch
/// shuffles come from one seeded generator, and updates run single-threaded.
/// Returns the parameters of the best validation-loss epoch.
pub fn train(
    data: &[LabeledDocument],
    ctx: &FeatureContext,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::TooFewExamples(
            "need at least 2 labeled documents for a document-level validation split".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((data.len() as f64 * cfg.validation_fraction).round() as usize)
        .clamp(1, data.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let mut val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();

    let train_docs: Vec<&LabeledDocument> = train_idx.iter().map(|&i| &data[i]).collect();
    let val_docs: Vec<&LabeledDocument> = val_idx.iter().map(|&i| &data[i]).collect();
    let train_set = examples_for(&train_docs, ctx)?;
    let val_set = examples_for(&val_docs, ctx)?;

    if train_set.len() < 2 {
        return Err(Error::TooFewExamples(format!(
            "training split has {} sentences",
            train_set.len()
        )));
    }
    let positives = train_set.iter().filter(|e| e.label == 1.0).count();
    if positives == 0 || positives == train_set.len() {
        return Err(Error::SingleClassData);
    }

    let mut params = ModelParams::new([0.0; FEATURE_WIDTH], 0.0, dataset_fingerprint(data));
    let mut best_params = params.clone();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut train_loss = Vec::with_capacity(cfg.max_epochs);
    let mut val_loss = Vec::with_capacity(cfg.max_epochs);
    let mut stopped_epoch = 0;

    let mut index: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        index.shuffle(&mut rng);
        for chunk in index.chunks(cfg.batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| train_set[i]).collect();
            let (grad_w, grad_b) = gradient(&params, &batch, cfg.l2)?;
            for (w, g) in params.weights.iter_mut().zip(grad_w.iter()) {
                *w -= cfg.learning_rate * g;
            }
            params.bias -= cfg.learning_rate * grad_b;
        }
        train_loss.push(loss(&params, &train_set, cfg.l2)?);
        let vl = loss(&params, &val_set, cfg.l2)?;
        val_loss.push(vl);
        stopped_epoch = epoch;
        let stop = stopper.observe(epoch, vl);
        if stopper.improved_at(epoch) {
            best_params = params.clone();
        }
        if stop {
            break;
        }
    }

    let report = TrainReport {
        train_loss,
        val_loss,
        stopped_epoch,
        best_epoch: stopper.best_epoch,
        params_fingerprint: params_fingerprint(&best_params),
        train_doc_ids: train_docs.iter().map(|d| d.doc.id.clone()).collect(),
        val_doc_ids: val_docs.iter().map(|d| d.doc.id.clone()).collect(),
    };
    Ok((best_params, report))
}

/// Fraction of examples whose thresholded prediction matches the label.
pub fn accuracy(params: &ModelParams, examples: &[Example], threshold: f64) -> f64 {
    if examples.is_empty() {
        return 0.0;
    }
    let correct = examples
        .iter()
        .filter(|ex| {
            let predicted = sigmoid(params.response(&ex.features)) >= threshold;
            predicted == (ex.label == 1.0)
        })
        .count();
    correct as f64 / examples.len() as f64
}

/// Feature-vector/label pairs for every sentence of the labeled documents,
/// in document order.
pub fn labeled_examples(data: &[LabeledDocument], ctx: &FeatureContext) -> Result<Vec<Example>> {
    let refs: Vec<&LabeledDocument> = data.iter().collect();
    examples_for(&refs, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawDocument;
    use crate::features::{build_idf, CueSet, Lexicon};

    fn fv(values: [f64; 8]) -> FeatureVector {
        FeatureVector { values }
    }

    fn ex(values: [f64; 8], label: f64) -> Example {
        Example {
            features: fv(values),
            label,
        }
    }

    #[test]
    fn loss_at_zero_params_is_ln2() {
        let p = ModelParams::new([0.0; 8], 0.0, String::new());
        let batch = vec![ex([0.5; 8], 1.0), ex([0.1; 8], 0.0), ex([0.9; 8], 1.0)];
        let l = loss(&p, &batch, 0.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn loss_at_confident_correct_prediction_is_tiny() {
        // σ(40) rounds to 1.0, the clamp pulls it to 1 − 1e-12, and
        // −ln(1 − 1e-12) ≈ 1e-12.
        let p = ModelParams::new([0.0; 8], 40.0, String::new());
        let batch = vec![ex([0.0; 8], 1.0)];
        let l = loss(&p, &batch, 0.0).unwrap();
        assert!(l >= 0.0 && l < 1e-9);
    }

    #[test]
    fn loss_matches_independent_scalar_computation() {
        let p = ModelParams::new([0.3, -0.2, 0.5, 0.0, 0.1, -0.4, 0.25, 0.05], -0.1, String::new());
        let batch = vec![
            ex([0.2, 0.4, 0.0, 1.0, 2.0, 0.0, 1.0, 0.1], 1.0),
            ex([0.6, 0.7, 0.5, 0.5, 0.0, 1.0, 0.0, 0.0], 0.0),
            ex([0.1, 0.1, 1.0, 0.3, 1.0, 0.0, 0.0, 0.5], 0.0),
            ex([0.9, 0.9, 0.2, 0.8, 3.0, 2.0, 1.0, 0.25], 1.0),
        ];
        let l2 = 0.01;
        // Straight-line reimplementation as the oracle.
        let mut expected = 0.0;
        for e in &batch {
            let mut z = p.bias;
            for i in 0..8 {
                z += p.weights[i] * e.features.values[i];
            }
            let q = 1.0 / (1.0 + (-z).exp());
            let q = q.clamp(1e-12, 1.0 - 1e-12);
            expected -= e.label * q.ln() + (1.0 - e.label) * (1.0 - q).ln();
        }
        expected /= batch.len() as f64;
        expected += 0.5 * l2 * p.weights.iter().map(|w| w * w).sum::<f64>();
        let got = loss(&p, &batch, l2).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn gradient_zero_when_saturated_correct() {
        let p = ModelParams::new([0.0; 8], 40.0, String::new());
        let batch = vec![ex([0.3; 8], 1.0)];
        let (gw, gb) = gradient(&p, &batch, 0.0).unwrap();
        assert!(gw.iter().all(|g| *g == 0.0));
        assert_eq!(gb, 0.0);
    }

    #[test]
    fn gradient_bias_at_zero_params() {
        let p = ModelParams::new([0.0; 8], 0.0, String::new());
        let (_, gb) = gradient(&p, &[ex([0.0; 8], 1.0)], 0.0).unwrap();
        assert!((gb - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let mut weights = [0.0; 8];
            for w in &mut weights {
                *w = rng.gen_range(-1.0..1.0);
            }
            let bias = rng.gen_range(-1.0..1.0);
            let l2 = [0.0, 1e-4, 1e-2][rng.gen_range(0..3)];
            let params = ModelParams::new(weights, bias, String::new());
            let batch: Vec<Example> = (0..rng.gen_range(1..8))
                .map(|_| {
                    let mut v = [0.0; 8];
                    for x in &mut v {
                        *x = rng.gen_range(-1.0..1.0);
                    }
                    ex(v, f64::from(rng.gen_range(0..2)))
                })
                .collect();
            let (gw, gb) = gradient(&params, &batch, l2).unwrap();
            let h = 1e-5;
            for d in 0..9 {
                let mut plus = params.clone();
                let mut minus = params.clone();
                if d < 8 {
                    plus.weights[d] += h;
                    minus.weights[d] -= h;
                } else {
                    plus.bias += h;
                    minus.bias -= h;
                }
                let num =
                    (loss(&plus, &batch, l2).unwrap() - loss(&minus, &batch, l2).unwrap()) / (2.0 * h);
                let ana = if d < 8 { gw[d] } else { gb };
                let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-8);
                assert!(rel < 1e-4, "coordinate {d}: analytic {ana} vs numeric {num}");
            }
        }
    }

    #[test]
    fn gradient_empty_batch_rejected() {
        let p = ModelParams::new([0.0; 8], 0.0, String::new());
        assert!(matches!(gradient(&p, &[], 0.0), Err(Error::EmptyBatch)));
        assert!(matches!(loss(&p, &[], 0.0), Err(Error::EmptyBatch)));
    }

    #[test]
    fn early_stopping_trace() {
        // Improves through epoch 4, then three non-improving epochs exhaust
        // patience 3: stop at epoch 7, best at 4.
        let mut s = EarlyStopping::new(3);
        let trace = [1.0, 0.8, 0.6, 0.5, 0.55, 0.56, 0.57, 0.40];
        let mut stopped = None;
        for (i, v) in trace.iter().enumerate() {
            if s.observe(i + 1, *v) {
                stopped = Some(i + 1);
                break;
            }
        }
        assert_eq!(stopped, Some(7));
        assert_eq!(s.best_epoch, 4);
    }

    fn labeled(id: &str, text: &str, labels: &[usize]) -> LabeledDocument {
        let doc = CleanDocument::build(&RawDocument {
            id: id.to_string(),
            text: text.to_string(),
            source_path: String::new(),
        })
        .unwrap();
        LabeledDocument::new(doc, labels.iter().copied().collect()).unwrap()
    }

    fn toy_data() -> Vec<LabeledDocument> {
        // Positives open with a cue phrase and carry citations and lexicon
        // terms; negatives are narrative filler. Separable on those features.
        let mut data = Vec::new();
        for i in 0..6 {
            data.push(labeled(
                &format!("doc{i}"),
                "The court finds the defendant liable under 42 U.S.C. § 1983 as pleaded. \
                 The parties met for coffee in March. \
                 Held, the plaintiff recovers damages of 500 dollars, No. 12-345. \
                 The weather that afternoon was mild. \
                 A record of the meeting was kept by the assistant.",
                &[0, 2],
            ));
        }
        data
    }

    fn ctx_for(data: &[LabeledDocument]) -> FeatureContext {
        let docs: Vec<CleanDocument> = data.iter().map(|d| d.doc.clone()).collect();
        FeatureContext::new(build_idf(&docs).unwrap(), Lexicon::builtin(), CueSet::builtin())
    }

    #[test]
    fn train_reaches_full_accuracy_on_separable_data() {
        let data = toy_data();
        let ctx = ctx_for(&data);
        let cfg = TrainConfig::default();
        let (params, report) = train(&data, &ctx, &cfg).unwrap();
        let examples = labeled_examples(&data, &ctx).unwrap();
        assert_eq!(accuracy(&params, &examples, 0.5), 1.0);
        assert!(report.best_epoch <= report.stopped_epoch);
        // Loss decreases: best train loss beats the zero-parameter loss ln 2.
        assert!(report.train_loss[report.best_epoch - 1] < std::f64::consts::LN_2);
    }

    #[test]
    fn train_is_deterministic() {
        let data = toy_data();
        let ctx = ctx_for(&data);
        let cfg = TrainConfig::default();
        let (p1, r1) = train(&data, &ctx, &cfg).unwrap();
        let (p2, r2) = train(&data, &ctx, &cfg).unwrap();
        assert_eq!(p1.to_json(), p2.to_json());
        assert_eq!(r1.params_fingerprint, r2.params_fingerprint);
        assert_eq!(r1.val_doc_ids, r2.val_doc_ids);
    }

    #[test]
    fn train_splits_by_document() {
        let data = toy_data();
        let ctx = ctx_for(&data);
        let (_, report) = train(&data, &ctx, &TrainConfig::default()).unwrap();
        assert!(!report.train_doc_ids.is_empty() && !report.val_doc_ids.is_empty());
        for id in &report.val_doc_ids {
            assert!(!report.train_doc_ids.contains(id));
        }
        assert_eq!(
            report.train_doc_ids.len() + report.val_doc_ids.len(),
            data.len()
        );
    }

    #[test]
    fn train_rejects_single_class() {
        let mut data = toy_data();
        for d in &mut data {
            d.labels.clear();
        }
        let ctx = ctx_for(&data);
        assert!(matches!(
            train(&data, &ctx, &TrainConfig::default()),
            Err(Error::SingleClassData)
        ));
    }

    #[test]
    fn train_rejects_too_few_documents() {
        let data = vec![toy_data().remove(0)];
        let ctx = ctx_for(&data);
        assert!(matches!(
            train(&data, &ctx, &TrainConfig::default()),
            Err(Error::TooFewExamples(_))
        ));
    }

    #[test]
    fn weights_stay_bounded_with_l2() {
        let data = toy_data();
        let ctx = ctx_for(&data);
        let cfg = TrainConfig {
            max_epochs: 100,
            patience: 100,
            ..Default::default()
        };
        let (params, _) = train(&data, &ctx, &cfg).unwrap();
        let norm = params.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        assert!(norm.is_finite() && norm < 1e3);
    }

    #[test]
    fn labeled_document_rejects_bad_indices() {
        let doc = CleanDocument::build(&RawDocument {
            id: "x".into(),
            text: "One. Two.".into(),
            source_path: String::new(),
        })
        .unwrap();
        assert!(matches!(
            LabeledDocument::new(doc, [5usize].into_iter().collect()),
            Err(Error::IndexOutOfRange { .. })
        ));
    }
}
