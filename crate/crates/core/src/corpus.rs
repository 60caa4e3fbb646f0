//! Document loading and text normalization.
//!
//! Raw documents are lowercased, every non-alphanumeric character is replaced
//! with an underscore, and the result is split on underscore runs. Tokens
//! shorter than the configured minimum and tokens on the stopword list are
//! dropped. An optional per-token normalizer hook runs between splitting and
//! filtering.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A document as loaded from disk, before any normalization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
}

/// A document after normalization: an ordered sequence of clean tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedDocument {
    pub id: String,
    pub tokens: Vec<String>,
}

/// An ordered collection of tokenized documents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub docs: Vec<TokenizedDocument>,
}

impl Corpus {
    pub fn new(docs: Vec<TokenizedDocument>) -> Self {
        Corpus { docs }
    }

    /// Number of documents.
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Total token count over all documents.
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.tokens.len()).sum()
    }
}

/// Per-token rewrite applied during tokenization, e.g. a lemmatizer stand-in.
/// Must return a lowercase alphanumeric token (or an empty string to drop it);
/// outputs violating the token alphabet are dropped.
pub type NormalizerHook = Arc<dyn Fn(&str) -> String + Send + Sync>;

/// Tokenization settings.
#[derive(Clone)]
pub struct NormalizationConfig {
    pub min_token_length: usize,
    pub stopwords: HashSet<String>,
    pub normalizer: Option<NormalizerHook>,
}

impl NormalizationConfig {
    /// Minimum length 3, bundled English stopwords, no normalizer hook.
    pub fn new() -> Self {
        NormalizationConfig {
            min_token_length: 3,
            stopwords: default_stopwords(),
            normalizer: None,
        }
    }

    /// No stopwords, minimum length 3, no hook. Handy in tests.
    pub fn bare() -> Self {
        NormalizationConfig {
            min_token_length: 3,
            stopwords: HashSet::new(),
            normalizer: None,
        }
    }
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for NormalizationConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NormalizationConfig")
            .field("min_token_length", &self.min_token_length)
            .field("stopwords", &self.stopwords.len())
            .field("normalizer", &self.normalizer.is_some())
            .finish()
    }
}

const BUNDLED_STOPWORDS: &str = include_str!("data/stopwords_en.txt");

/// The bundled English stopword list.
pub fn default_stopwords() -> HashSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

/// Load a stopword file: one token per line, `#`-prefixed comment lines and
/// blank lines ignored.
pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_stopwords(&text))
}

fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_lowercase())
        .collect()
}

/// Input layouts understood by [`load_corpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON record per line with fields `id` and `text`.
    Jsonl,
    /// A directory of `.txt` files; the file stem becomes the document id.
    TextDir,
}

/// Load raw documents in a deterministic order: jsonl keeps file order,
/// textdir sorts lexicographically by filename.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<RawDocument>> {
    let docs = match format {
        CorpusFormat::Jsonl => load_jsonl(path)?,
        CorpusFormat::TextDir => load_textdir(path)?,
    };
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(Error::DuplicateDocId { id: doc.id.clone() });
        }
    }
    Ok(docs)
}

fn load_jsonl(path: &Path) -> Result<Vec<RawDocument>> {
    let file = fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument =
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        docs.push(doc);
    }
    Ok(docs)
}

fn load_textdir(path: &Path) -> Result<Vec<RawDocument>> {
    let entries = fs::read_dir(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        if p.extension().map_or(false, |e| e == "txt") {
            files.push(p);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    let mut docs = Vec::new();
    for p in files {
        let stem = p
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::MalformedLine {
                path: p.clone(),
                line: 0,
                message: "filename is not valid UTF-8".to_string(),
            })?
            .to_string();
        let text = fs::read_to_string(&p).map_err(|source| Error::Io {
            path: p.clone(),
            source,
        })?;
        docs.push(RawDocument { id: stem, text });
    }
    Ok(docs)
}

/// Write raw documents as jsonl, one record per line.
pub fn write_raw_jsonl(docs: &[RawDocument], path: &Path) -> Result<()> {
    let mut out = String::new();
    for doc in docs {
        // serde_json keeps struct field order, so output is deterministic.
        out.push_str(&serde_json::to_string(doc).expect("document is serializable"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Write a tokenized corpus as jsonl with `text` holding the space-joined tokens.
pub fn write_corpus_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let docs: Vec<RawDocument> = corpus
        .docs
        .iter()
        .map(|d| RawDocument {
            id: d.id.clone(),
            text: d.tokens.join(" "),
        })
        .collect();
    write_raw_jsonl(&docs, path)
}

fn is_token_char(c: char) -> bool {
    c.is_ascii_lowercase() || c.is_ascii_digit()
}

/// Normalize one document into a token sequence.
///
/// Lowercases, maps every non-alphanumeric character to `_`, splits on
/// underscore runs, applies the normalizer hook, then drops short tokens and
/// stopwords. Surviving tokens keep their original order.
pub fn tokenize(doc: &RawDocument, cfg: &NormalizationConfig) -> TokenizedDocument {
    let lowered = doc.text.to_lowercase();
    let mut tokens = Vec::new();
    for piece in lowered.split(|c: char| !c.is_ascii_alphanumeric()) {
        if piece.is_empty() {
            continue;
        }
        let candidate = match &cfg.normalizer {
            Some(hook) => hook(piece),
            None => piece.to_string(),
        };
        if candidate.len() < cfg.min_token_length {
            continue;
        }
        if !candidate.chars().all(is_token_char) {
            continue;
        }
        if cfg.stopwords.contains(&candidate) {
            continue;
        }
        tokens.push(candidate);
    }
    TokenizedDocument {
        id: doc.id.clone(),
        tokens,
    }
}

/// Tokenize a batch of documents, preserving input order.
pub fn tokenize_all(docs: &[RawDocument], cfg: &NormalizationConfig, parallel: bool) -> Corpus {
    let tokenized = if parallel {
        docs.par_iter().map(|d| tokenize(d, cfg)).collect()
    } else {
        docs.iter().map(|d| tokenize(d, cfg)).collect()
    };
    Corpus::new(tokenized)
}

/// Built-in plural stripper: drops a trailing `s` from a token whenever the
/// stripped form also occurs somewhere in the corpus.
pub fn strip_plurals(corpus: &Corpus) -> Corpus {
    let seen: HashSet<&str> = corpus
        .docs
        .iter()
        .flat_map(|d| d.tokens.iter().map(String::as_str))
        .collect();
    let docs = corpus
        .docs
        .iter()
        .map(|d| TokenizedDocument {
            id: d.id.clone(),
            tokens: d
                .tokens
                .iter()
                .map(|t| {
                    match t.strip_suffix('s') {
                        Some(stem) if seen.contains(stem) => stem.to_string(),
                        _ => t.clone(),
                    }
                })
                .collect(),
        })
        .collect();
    Corpus::new(docs)
}
