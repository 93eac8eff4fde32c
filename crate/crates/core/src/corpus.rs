//! Document ingestion, cleaning, sentence segmentation and tokenization.
//!
//! Everything in this module is a pure function of its inputs: the same raw
//! text always produces the same cleaned text, sentence spans and tokens.
//! Sentence spans are byte offsets into the cleaned text and cover all
//! non-whitespace content, so the cleaned text can be reconstructed by
//! joining sentence slices with single spaces.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A document as ingested, before any normalization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub source_path: String,
}

/// One segmented sentence of a cleaned document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    /// Position within the document, 0-based and contiguous.
    pub index: usize,
    /// The sentence text, sliced out of the cleaned document text.
    pub raw: String,
    /// Lowercase tokens; never empty for a sentence inside a `CleanDocument`.
    pub tokens: Vec<String>,
    /// Byte offsets `(start, end)` into the cleaned document text.
    pub char_span: (usize, usize),
}

/// A cleaned, segmented document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    /// Cleaned text: single-spaced, control characters stripped, quotes and
    /// dashes normalized to ASCII.
    pub text: String,
    pub sentences: Vec<Sentence>,
    /// Sum of the sentence token counts.
    pub token_count: usize,
}

/// One dataset entry: a document plus optional evaluation annotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub document: RawDocument,
    pub reference_summary: Option<String>,
    /// Gold key-sentence indices, when annotated.
    pub key_segment_labels: Option<BTreeSet<usize>>,
}

impl DatasetRecord {
    /// True if the record carries at least one annotation usable for evaluation.
    pub fn is_evaluable(&self) -> bool {
        self.reference_summary.is_some() || self.key_segment_labels.is_some()
    }
}

/// Supported dataset layouts for [`load_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One JSON object per line with fields `id`, `text`, `summary?`, `labels?`.
    Jsonl,
    /// Directory of `*.txt` files; the id is the filename stem.
    TextDir,
}

/// Normalize a raw document's text.
///
/// Collapses whitespace runs to single spaces, strips control characters and
/// maps Unicode quotes and dashes to their ASCII counterparts. Alphanumeric
/// content and sentence punctuation pass through untouched. Idempotent.
pub fn clean(doc: &RawDocument) -> Result<String> {
    let mut out = String::with_capacity(doc.text.len());
    let mut pending_space = false;
    for c in doc.text.chars() {
        let c = normalize_char(c);
        if c.is_control() || c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.push(c);
    }
    if out.is_empty() {
        return Err(Error::EmptyDocument(doc.id.clone()));
    }
    Ok(out)
}

fn normalize_char(c: char) -> char {
    match c {
        '\u{2018}' | '\u{2019}' | '\u{201A}' | '\u{201B}' => '\'',
        '\u{201C}' | '\u{201D}' | '\u{201E}' | '\u{201F}' => '"',
        // hyphen, non-breaking hyphen, figure dash, en/em dash, horizontal bar, minus
        '\u{2010}'..='\u{2015}' | '\u{2212}' => '-',
        c => c,
    }
}

/// Dotted abbreviations that never terminate a sentence. Fixed set; compared
/// case-insensitively against the word ending at a candidate period.
pub const ABBREVIATIONS: &[&str] = &[
    "v.", "no.", "fed.", "stat.", "u.s.", "u.s.c.", "inc.", "corp.", "id.",
];

/// Token pattern. Alternatives are tried in order: dotted multi-part
/// abbreviations ("u.s.", "u.s.c.") stay whole, as do hyphenated digit runs
/// ("12-345", docket-number shapes); anything else is a maximal alphanumeric
/// run.
static TOKEN_RE: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"(?:[\p{L}]\.){2,}|\p{N}+(?:-\p{N}+)+|[\p{L}\p{N}]+").unwrap());

/// Lowercase and split a sentence into tokens.
///
/// Splits on maximal runs of non-alphanumeric characters, except that
/// citation-shaped substrings (dotted abbreviations like "U.S.", hyphenated
/// docket numbers like "12-345") are kept as single tokens. No stemming.
pub fn tokenize(raw: &str) -> Result<Vec<String>> {
    let lowered = raw.to_lowercase();
    let tokens: Vec<String> = TOKEN_RE
        .find_iter(&lowered)
        .map(|m| m.as_str().to_string())
        .collect();
    if tokens.is_empty() {
        return Err(Error::NoTokens);
    }
    Ok(tokens)
}

/// Split cleaned text into sentences.
///
/// A boundary is a `.`, `!` or `?` followed by whitespace and an uppercase
/// letter or digit, except after a known legal abbreviation (see
/// [`ABBREVIATIONS`]) or inside a section-number context ("§ 1983."). Spans
/// are non-overlapping and cover all non-whitespace text; a text without any
/// terminator yields a single sentence. Fragments without any alphanumeric
/// content are merged into their neighbor so that every emitted sentence
/// tokenizes (the pathological all-symbol text comes back as one tokenless
/// sentence and is rejected by [`CleanDocument::build`]).
pub fn segment_sentences(cleaned_text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = cleaned_text.char_indices().collect();
    let mut boundaries: Vec<usize> = Vec::new();

    for k in 0..chars.len() {
        let (i, c) = chars[k];
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let followed_by_space = matches!(chars.get(k + 1), Some((_, ' ')));
        let starts_new = chars
            .get(k + 2)
            .is_some_and(|&(_, c2)| c2.is_uppercase() || c2.is_ascii_digit());
        if !(followed_by_space && starts_new) {
            continue;
        }
        if c == '.' && is_abbreviation_context(cleaned_text, i) {
            continue;
        }
        boundaries.push(i + c.len_utf8());
    }

    // Cut into trimmed fragments.
    let mut fragments: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for &b in &boundaries {
        push_trimmed(cleaned_text, start, b, &mut fragments);
        start = b;
    }
    push_trimmed(cleaned_text, start, cleaned_text.len(), &mut fragments);

    // Merge fragments that carry no tokens into the following fragment
    // (or the preceding one, for a trailing fragment).
    let mut merged: Vec<(usize, usize, Vec<String>)> = Vec::new();
    let mut carry: Option<usize> = None;
    for (s, e) in fragments {
        let s = carry.take().unwrap_or(s);
        match tokenize(&cleaned_text[s..e]) {
            Ok(tokens) => merged.push((s, e, tokens)),
            Err(_) => carry = Some(s),
        }
    }
    if let Some(s) = carry {
        match merged.pop() {
            Some((ps, _, _)) => {
                let e = cleaned_text.trim_end().len();
                let tokens = tokenize(&cleaned_text[ps..e]).unwrap_or_default();
                merged.push((ps, e, tokens));
            }
            // Entire text is symbols: single tokenless sentinel.
            None => merged.push((s, cleaned_text.trim_end().len(), Vec::new())),
        }
    }

    merged
        .into_iter()
        .enumerate()
        .map(|(index, (s, e, tokens))| Sentence {
            index,
            raw: cleaned_text[s..e].to_string(),
            tokens,
            char_span: (s, e),
        })
        .collect()
}

fn push_trimmed(text: &str, start: usize, end: usize, out: &mut Vec<(usize, usize)>) {
    let slice = &text[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    let (s, e) = (start + lead, end - trail);
    if s < e {
        out.push((s, e));
    }
}

/// True when the period at byte offset `dot` ends a known abbreviation or a
/// section-number token ("§ 1983.").
fn is_abbreviation_context(text: &str, dot: usize) -> bool {
    let upto = &text[..dot + 1];
    let word_start = upto.rfind(' ').map_or(0, |p| p + 1);
    let word = upto[word_start..].to_lowercase();
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    // "§ <digits>." — the period closes a section number, not a sentence.
    let digits = &word[..word.len() - 1];
    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
        let before = upto[..word_start].trim_end();
        if before.ends_with('§') {
            return true;
        }
    }
    false
}

impl CleanDocument {
    /// Clean, segment and tokenize a raw document.
    pub fn build(raw: &RawDocument) -> Result<CleanDocument> {
        let text = clean(raw)?;
        let sentences = segment_sentences(&text);
        if sentences.iter().any(|s| s.tokens.is_empty()) {
            return Err(Error::NoTokens);
        }
        let token_count = sentences.iter().map(|s| s.tokens.len()).sum();
        Ok(CleanDocument {
            id: raw.id.clone(),
            text,
            sentences,
            token_count,
        })
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    summary: Option<String>,
    #[serde(default)]
    labels: Option<Vec<usize>>,
}

/// Load a dataset from disk.
///
/// Every record is parsed or rejected with a line-numbered error; duplicate
/// ids are an error; input order is preserved.
pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<DatasetRecord>> {
    match format {
        DatasetFormat::Jsonl => load_jsonl(path),
        DatasetFormat::TextDir => load_text_dir(path),
    }
}

fn load_jsonl(path: &Path) -> Result<Vec<DatasetRecord>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| Error::ParseError {
            line: line_no,
            reason: e.to_string(),
        })?;
        if rec.id.is_empty() {
            return Err(Error::ParseError {
                line: line_no,
                reason: "empty id".to_string(),
            });
        }
        if rec.text.is_empty() {
            return Err(Error::ParseError {
                line: line_no,
                reason: format!("document {:?} has empty text", rec.id),
            });
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::DuplicateId(rec.id));
        }
        records.push(DatasetRecord {
            document: RawDocument {
                id: rec.id,
                text: rec.text,
                source_path: format!("{}:{}", path.display(), line_no),
            },
            reference_summary: rec.summary,
            key_segment_labels: rec.labels.map(|ls| ls.into_iter().collect()),
        });
    }
    Ok(records)
}

fn load_text_dir(path: &Path) -> Result<Vec<DatasetRecord>> {
    let mut files: Vec<_> = fs::read_dir(path)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
        .collect();
    files.sort();
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for file in files {
        let id = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = fs::read_to_string(&file)?;
        if text.is_empty() {
            return Err(Error::ParseError {
                line: 0,
                reason: format!("{}: file is empty", file.display()),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        records.push(DatasetRecord {
            document: RawDocument {
                id,
                text,
                source_path: file.display().to_string(),
            },
            reference_summary: None,
            key_segment_labels: None,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn raw(id: &str, text: &str) -> RawDocument {
        RawDocument {
            id: id.to_string(),
            text: text.to_string(),
            source_path: String::new(),
        }
    }

    #[test]
    fn clean_collapses_whitespace() {
        assert_eq!(clean(&raw("a", "Order\r\n\r\n  GRANTED.")).unwrap(), "Order GRANTED.");
    }

    #[test]
    fn clean_is_identity_on_clean_input() {
        assert_eq!(clean(&raw("a", "already clean text.")).unwrap(), "already clean text.");
    }

    #[test]
    fn clean_normalizes_quotes_and_dashes() {
        assert_eq!(
            clean(&raw("a", "\u{201C}quoted\u{201D} \u{2014} it\u{2019}s")).unwrap(),
            "\"quoted\" - it's"
        );
    }

    #[test]
    fn clean_rejects_whitespace_only() {
        assert!(matches!(
            clean(&raw("a", " \t\r\n \u{0007} ")),
            Err(Error::EmptyDocument(_))
        ));
    }

    #[test]
    fn clean_long_mixed_fixture_has_no_double_spaces() {
        // 1,000+ chars of words joined by CRLF/tab/space noise; the oracle is
        // a character-level scan of the output.
        let mut text = String::new();
        for i in 0..120 {
            text.push_str(&format!("word{i}"));
            text.push_str(match i % 4 {
                0 => "\r\n\t",
                1 => "   ",
                2 => "\t\t",
                _ => " \r ",
            });
        }
        assert!(text.len() > 1000);
        let cleaned = clean(&raw("a", &text)).unwrap();
        let mut prev_space = false;
        for c in cleaned.chars() {
            assert!(!c.is_control());
            if c == ' ' {
                assert!(!prev_space, "found consecutive spaces");
                prev_space = true;
            } else {
                prev_space = false;
            }
        }
        assert!(!cleaned.starts_with(' ') && !cleaned.ends_with(' '));
    }

    #[test]
    fn clean_is_idempotent() {
        let once = clean(&raw("a", "A \u{2018}b\u{2019}\t c. \r\n D.")).unwrap();
        let twice = clean(&raw("a", &once)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn segment_plain_split() {
        let s = segment_sentences("The motion is denied. Costs are awarded.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].raw, "The motion is denied.");
        assert_eq!(s[1].raw, "Costs are awarded.");
    }

    #[test]
    fn segment_respects_legal_abbreviations() {
        // Abbreviation-list oracle applied by hand: "v." and "U.S." are in
        // the shipped set, so the only boundary is after "113.".
        let s = segment_sentences("See Smith v. Jones, 410 U.S. 113. The court agrees.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].raw, "See Smith v. Jones, 410 U.S. 113.");
        assert_eq!(s[1].raw, "The court agrees.");
    }

    #[test]
    fn segment_no_terminator_is_one_sentence() {
        let s = segment_sentences("no terminator here");
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].char_span, (0, 18));
    }

    #[test]
    fn segment_section_number_context() {
        let s = segment_sentences("Liability arises under § 1983. No. 12-345 is dismissed.");
        // "§ 1983." does not end the sentence; "No." is an abbreviation.
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn segment_merges_tokenless_fragments() {
        let s = segment_sentences("!!! Hello there. Good.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].raw, "!!! Hello there.");
        assert!(!s[0].tokens.is_empty());
    }

    #[test]
    fn segment_spans_reconstruct_text() {
        let text = "See Smith v. Jones, 410 U.S. 113. The court agrees. Costs! Done.";
        let sents = segment_sentences(text);
        let joined: Vec<&str> = sents.iter().map(|s| &text[s.char_span.0..s.char_span.1]).collect();
        assert_eq!(joined.join(" "), text);
        for w in sents.windows(2) {
            assert!(w[0].char_span.1 <= w[1].char_span.0);
        }
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(
            tokenize("The Court DENIED it.").unwrap(),
            vec!["the", "court", "denied", "it"]
        );
    }

    #[test]
    fn tokenize_empty_is_error() {
        assert!(matches!(tokenize(""), Err(Error::NoTokens)));
        assert!(matches!(tokenize("!!! --- ..."), Err(Error::NoTokens)));
    }

    #[test]
    fn tokenize_keeps_citation_tokens_whole() {
        // Citation-token rule checked by hand: "U.S." is a dotted
        // abbreviation and stays one token.
        assert_eq!(tokenize("410 U.S. 113").unwrap(), vec!["410", "u.s.", "113"]);
        assert_eq!(tokenize("No. 12-345").unwrap(), vec!["no", "12-345"]);
        assert_eq!(tokenize("42 U.S.C. § 1983").unwrap(), vec!["42", "u.s.c.", "1983"]);
    }

    #[test]
    fn build_clean_document_counts_tokens() {
        let doc = CleanDocument::build(&raw("d1", "The motion is denied. Costs are awarded.")).unwrap();
        assert_eq!(doc.sentences.len(), 2);
        assert_eq!(doc.token_count, 7);
        assert!(doc.sentences.iter().enumerate().all(|(i, s)| s.index == i));
    }

    #[test]
    fn build_rejects_symbol_only_text() {
        assert!(matches!(
            CleanDocument::build(&raw("d1", "!!! ???")),
            Err(Error::NoTokens)
        ));
    }

    #[test]
    fn load_jsonl_roundtrip() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x. y.","labels":[0]}}"#).unwrap();
        writeln!(f, r#"{{"id":"b","text":"Second doc.","summary":"s"}}"#).unwrap();
        writeln!(f, r#"{{"id":"c","text":"Third doc."}}"#).unwrap();
        let recs = load_dataset(f.path(), DatasetFormat::Jsonl).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(
            recs.iter().map(|r| r.document.id.as_str()).collect::<Vec<_>>(),
            vec!["a", "b", "c"]
        );
        assert_eq!(recs[0].key_segment_labels.as_ref().unwrap().len(), 1);
        assert!(recs[0].key_segment_labels.as_ref().unwrap().contains(&0));
        assert!(recs[1].is_evaluable());
        assert!(!recs[2].is_evaluable());
    }

    #[test]
    fn load_jsonl_duplicate_id() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x."}}"#).unwrap();
        writeln!(f, r#"{{"id":"b","text":"y."}}"#).unwrap();
        writeln!(f, r#"{{"id":"a","text":"z."}}"#).unwrap();
        match load_dataset(f.path(), DatasetFormat::Jsonl) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "a"),
            other => panic!("expected DuplicateId, got {other:?}"),
        }
    }

    #[test]
    fn load_jsonl_reports_line_numbers() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"id":"a","text":"x."}}"#).unwrap();
        writeln!(f, "not json").unwrap();
        match load_dataset(f.path(), DatasetFormat::Jsonl) {
            Err(Error::ParseError { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ParseError, got {other:?}"),
        }
    }

    #[test]
    fn load_text_dir_sorted_by_name() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "Doc b.").unwrap();
        fs::write(dir.path().join("a.txt"), "Doc a.").unwrap();
        fs::write(dir.path().join("ignore.md"), "not text").unwrap();
        let recs = load_dataset(dir.path(), DatasetFormat::TextDir).unwrap();
        assert_eq!(
            recs.iter().map(|r| r.document.id.as_str()).collect::<Vec<_>>(),
            vec!["a", "b"]
        );
    }
}
