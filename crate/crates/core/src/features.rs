//! Per-sentence feature extraction.
//!
//! Every scorer consumes the same fixed-width vector of 8 named dimensions:
//! `tfidf_mean`, `tfidf_max`, `position`, `rel_length`, `lexicon_hits`,
//! `citation_count`, `cue_phrase`, `numeric_density`. The IDF table and the
//! term lists are immutable after construction and safe to share across
//! parallel workers; extraction itself is pure.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, CleanDocument, Sentence};
use crate::error::{Error, Result};

/// Canonical feature order. `ModelParams` serialization embeds these names
/// and loading rejects any mismatch.
pub const FEATURE_NAMES: [&str; 8] = [
    "tfidf_mean",
    "tfidf_max",
    "position",
    "rel_length",
    "lexicon_hits",
    "citation_count",
    "cue_phrase",
    "numeric_density",
];

/// Number of feature dimensions.
pub const FEATURE_WIDTH: usize = 8;

/// φ(s): the fixed-width feature vector for one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_WIDTH],
}

impl FeatureVector {
    pub fn tfidf_mean(&self) -> f64 {
        self.values[0]
    }
    pub fn tfidf_max(&self) -> f64 {
        self.values[1]
    }
    pub fn position(&self) -> f64 {
        self.values[2]
    }
    pub fn rel_length(&self) -> f64 {
        self.values[3]
    }
    pub fn lexicon_hits(&self) -> f64 {
        self.values[4]
    }
    pub fn citation_count(&self) -> f64 {
        self.values[5]
    }
    pub fn cue_phrase(&self) -> f64 {
        self.values[6]
    }
    pub fn numeric_density(&self) -> f64 {
        self.values[7]
    }

    /// Name of the first non-finite dimension, if any.
    pub fn non_finite_dim(&self) -> Option<&'static str> {
        self.values
            .iter()
            .zip(FEATURE_NAMES.iter())
            .find(|(v, _)| !v.is_finite())
            .map(|(_, name)| *name)
    }
}

/// Smoothed inverse document frequency over a corpus.
///
/// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, where df counts documents (not
/// occurrences). Tokens absent from the table fall back to `df = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdfTable {
    idf: HashMap<String, f64>,
    pub doc_count: usize,
}

impl IdfTable {
    pub fn lookup(&self, token: &str) -> f64 {
        match self.idf.get(token) {
            Some(&v) => v,
            None => ((1.0 + self.doc_count as f64) / 1.0).ln() + 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.idf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idf.is_empty()
    }
}

/// Build the IDF table from a corpus of cleaned documents.
pub fn build_idf(corpus: &[CleanDocument]) -> Result<IdfTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = corpus.len();
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in corpus {
        let uniq: HashSet<&str> = doc
            .sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        for tok in uniq {
            *df.entry(tok.to_string()).or_insert(0) += 1;
        }
    }
    let idf = df
        .into_iter()
        .map(|(tok, d)| {
            let v = ((1.0 + n as f64) / (1.0 + d as f64)).ln() + 1.0;
            (tok, v)
        })
        .collect();
    Ok(IdfTable { idf, doc_count: n })
}

/// A versioned set of lowercase legal terms and phrases.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub terms: BTreeSet<String>,
    pub name: String,
    pub version: String,
    token_seqs: Vec<Vec<String>>,
}

/// A versioned list of sentence-opening cue phrases.
#[derive(Debug, Clone)]
pub struct CueSet {
    pub phrases: BTreeSet<String>,
    pub name: String,
    pub version: String,
    token_seqs: Vec<Vec<String>>,
}

/// Parsed contents of a term file: one lowercase term per line, `#` comments.
/// `# name:` and `# version:` comment lines carry metadata.
struct TermFile {
    terms: BTreeSet<String>,
    name: Option<String>,
    version: Option<String>,
}

fn parse_term_file(content: &str) -> Result<TermFile> {
    let mut terms = BTreeSet::new();
    let mut name = None;
    let mut version = None;
    for (lineno, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("name:") {
                name = Some(v.trim().to_string());
            } else if let Some(v) = comment.strip_prefix("version:") {
                version = Some(v.trim().to_string());
            }
            continue;
        }
        if line.chars().any(|c| c.is_uppercase()) {
            return Err(Error::InvalidConfig(format!(
                "term file line {}: terms must be lowercase: {:?}",
                lineno + 1,
                line
            )));
        }
        if !terms.insert(line.to_string()) {
            return Err(Error::InvalidConfig(format!(
                "term file line {}: duplicate term {:?}",
                lineno + 1,
                line
            )));
        }
    }
    if terms.is_empty() {
        return Err(Error::InvalidConfig("term file has no terms".to_string()));
    }
    Ok(TermFile { terms, name, version })
}

fn tokenize_terms(terms: &BTreeSet<String>) -> Vec<Vec<String>> {
    terms.iter().filter_map(|t| tokenize(t).ok()).collect()
}

impl Lexicon {
    pub fn from_str(content: &str, fallback_name: &str) -> Result<Lexicon> {
        let parsed = parse_term_file(content)?;
        let token_seqs = tokenize_terms(&parsed.terms);
        Ok(Lexicon {
            token_seqs,
            terms: parsed.terms,
            name: parsed.name.unwrap_or_else(|| fallback_name.to_string()),
            version: parsed.version.unwrap_or_else(|| "unversioned".to_string()),
        })
    }

    pub fn from_file(path: &Path) -> Result<Lexicon> {
        let content = std::fs::read_to_string(path)?;
        Self::from_str(&content, &path.display().to_string())
    }

    /// The lexicon shipped with the library.
    pub fn builtin() -> Lexicon {
        Self::from_str(include_str!("../data/legal_terms.txt"), "builtin").expect("builtin lexicon is valid")
    }

    /// Count the distinct lexicon terms that occur in the token sequence
    /// (phrase match: contiguous token subsequence).
    pub fn count_hits(&self, tokens: &[String]) -> usize {
        self.token_seqs
            .iter()
            .filter(|seq| contains_seq(tokens, seq))
            .count()
    }
}

impl CueSet {
    pub fn from_str(content: &str, fallback_name: &str) -> Result<CueSet> {
        let parsed = parse_term_file(content)?;
        let token_seqs = tokenize_terms(&parsed.terms);
        Ok(CueSet {
            token_seqs,
            phrases: parsed.terms,
            name: parsed.name.unwrap_or_else(|| fallback_name.to_string()),
            version: parsed.version.unwrap_or_else(|| "unversioned".to_string()),
        })
    }

    pub fn from_file(path: &Path) -> Result<CueSet> {
        let content = std::fs::read_to_string(path)?;
        Self::from_str(&content, &path.display().to_string())
    }

    /// The cue-phrase list shipped with the library.
    pub fn builtin() -> CueSet {
        Self::from_str(include_str!("../data/cue_phrases.txt"), "builtin").expect("builtin cue set is valid")
    }

    /// True when the sentence's tokens open with one of the cue phrases.
    pub fn starts_with_cue(&self, tokens: &[String]) -> bool {
        self.token_seqs
            .iter()
            .any(|seq| tokens.len() >= seq.len() && &tokens[..seq.len()] == seq.as_slice())
    }
}

fn contains_seq(hay: &[String], needle: &[String]) -> bool {
    !needle.is_empty()
        && needle.len() <= hay.len()
        && hay.windows(needle.len()).any(|w| w == needle)
}

/// Everything feature extraction needs besides the document itself.
/// Immutable after construction; share freely across parallel workers.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    pub idf: IdfTable,
    pub lexicon: Lexicon,
    pub cues: CueSet,
}

impl FeatureContext {
    pub fn new(idf: IdfTable, lexicon: Lexicon, cues: CueSet) -> FeatureContext {
        FeatureContext { idf, lexicon, cues }
    }

    /// Build a context for a corpus using the shipped term lists.
    pub fn for_corpus(corpus: &[CleanDocument]) -> Result<FeatureContext> {
        Ok(FeatureContext {
            idf: build_idf(corpus)?,
            lexicon: Lexicon::builtin(),
            cues: CueSet::builtin(),
        })
    }

    pub fn extract(&self, sentence: &Sentence, doc: &CleanDocument) -> Result<FeatureVector> {
        extract_features(sentence, doc, &self.idf, &self.lexicon, &self.cues)
    }

    /// Feature vectors for every sentence of a document, in order.
    pub fn extract_all(&self, doc: &CleanDocument) -> Result<Vec<FeatureVector>> {
        doc.sentences.iter().map(|s| self.extract(s, doc)).collect()
    }
}

/// What a citation span matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CitationKind {
    CaseCitation,
    Statute,
    Docket,
}

/// A citation match inside one sentence, byte offsets into `sentence.raw`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationSpan {
    pub start: usize,
    pub end: usize,
    pub kind: CitationKind,
}

// `<Name> v. <Name>, <vol> <reporter> <page>`
static CASE_RE: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"(?:[A-Z][A-Za-z'.-]*\s+)+v\.\s+[A-Z][A-Za-z'.-]*(?:\s+[A-Z][A-Za-z'.-]*)*,\s+\d+\s+[A-Z][A-Za-z0-9.]*(?:\s+Supp\.)?\s+\d+",
    )
    .unwrap()
});

// `§ <number>` or `<title> U.S.C. § <number>`
static STATUTE_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?:\d+\s+U\.S\.C\.\s+)?§§?\s*\d+[\w().-]*").unwrap());

// `No. <digits[-digits]>`
static DOCKET_RE: Lazy<Regex> = Lazy::new(|| Regex::new(r"Nos?\.\s*\d+(?:-\d+)*").unwrap());

/// Find citation spans in a sentence. Spans are non-overlapping: the longest
/// match wins, ties broken by the leftmost start.
pub fn detect_citations(sentence: &Sentence) -> Vec<CitationSpan> {
    let text = &sentence.raw;
    let mut candidates: Vec<CitationSpan> = Vec::new();
    for (re, kind) in [
        (&*CASE_RE, CitationKind::CaseCitation),
        (&*STATUTE_RE, CitationKind::Statute),
        (&*DOCKET_RE, CitationKind::Docket),
    ] {
        for m in re.find_iter(text) {
            candidates.push(CitationSpan {
                start: m.start(),
                end: m.end(),
                kind,
            });
        }
    }
    candidates.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
    });
    let mut chosen: Vec<CitationSpan> = Vec::new();
    for c in candidates {
        if chosen.iter().all(|k| c.end <= k.start || c.start >= k.end) {
            chosen.push(c);
        }
    }
    chosen.sort_by_key(|c| c.start);
    chosen
}

fn is_numeric_token(tok: &str) -> bool {
    tok.chars().any(|c| c.is_ascii_digit())
        && tok.chars().all(|c| c.is_ascii_digit() || c == '-' || c == '.')
}

/// Compute φ(s) for one sentence of a document.
pub fn extract_features(
    sentence: &Sentence,
    doc: &CleanDocument,
    idf: &IdfTable,
    lexicon: &Lexicon,
    cues: &CueSet,
) -> Result<FeatureVector> {
    let belongs = doc
        .sentences
        .get(sentence.index)
        .is_some_and(|s| s == sentence);
    if !belongs {
        return Err(Error::SentenceNotInDocument {
            doc_id: doc.id.clone(),
            index: sentence.index,
        });
    }

    let len = sentence.tokens.len() as f64;
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for tok in &sentence.tokens {
        *counts.entry(tok.as_str()).or_insert(0) += 1;
    }
    let mut tfidf_sum = 0.0;
    let mut tfidf_max = 0.0f64;
    for tok in &sentence.tokens {
        let tf = counts[tok.as_str()] as f64 / len;
        let v = tf * idf.lookup(tok);
        tfidf_sum += v;
        tfidf_max = tfidf_max.max(v);
    }
    let tfidf_mean = tfidf_sum / len;

    let n = doc.sentences.len();
    let position = if n <= 1 {
        0.0
    } else {
        sentence.index as f64 / (n - 1) as f64
    };
    let max_len = doc
        .sentences
        .iter()
        .map(|s| s.tokens.len())
        .max()
        .unwrap_or(1) as f64;
    let rel_length = len / max_len;
    let lexicon_hits = lexicon.count_hits(&sentence.tokens) as f64;
    let citation_count = detect_citations(sentence).len() as f64;
    let cue_phrase = if cues.starts_with_cue(&sentence.tokens) {
        1.0
    } else {
        0.0
    };
    let numeric = sentence
        .tokens
        .iter()
        .filter(|t| is_numeric_token(t))
        .count() as f64;
    let numeric_density = numeric / len;

    Ok(FeatureVector {
        values: [
            tfidf_mean,
            tfidf_max,
            position,
            rel_length,
            lexicon_hits,
            citation_count,
            cue_phrase,
            numeric_density,
        ],
    })
}
