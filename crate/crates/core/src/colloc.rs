//! Collocation extraction: TF-IDF scoring, top-P vocabulary selection, and
//! iterative pair merging, plus a Student's t-test bigram baseline.
//!
//! The merge loop concatenates consecutive token pairs whose components are
//! both in the current vocabulary, re-selects the vocabulary jointly over
//! candidates and existing tokens, and rewrites the corpus. After `r` rounds
//! a merged token can span up to `2^r` original words.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Corpus, TokenizedDocument};
use crate::error::{Error, Result};

/// Separator joining the components of a merged token. Tokenization never
/// emits `-` inside a base token, so splitting on it recovers components.
pub const MERGE_SEPARATOR: char = '-';

/// Join two vocabulary tokens into a merged-token surface.
pub fn merge_tokens(left: &str, right: &str) -> String {
    let mut s = String::with_capacity(left.len() + right.len() + 1);
    s.push_str(left);
    s.push(MERGE_SEPARATOR);
    s.push_str(right);
    s
}

/// Number of original words concatenated into this token (1 for base tokens).
pub fn token_arity(token: &str) -> usize {
    token.matches(MERGE_SEPARATOR).count() + 1
}

/// Component words of a (possibly merged) token.
pub fn token_components(token: &str) -> impl Iterator<Item = &str> {
    token.split(MERGE_SEPARATOR)
}

/// Corpus-wide counts for one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TokenStats {
    /// Occurrences summed over all documents.
    pub total_tf: u64,
    /// Number of documents containing the token.
    pub df: u64,
}

/// Exact occurrence and document-frequency counts for every token.
pub fn compute_token_stats(corpus: &Corpus) -> HashMap<String, TokenStats> {
    let per_doc: Vec<HashMap<&str, u64>> = corpus
        .docs
        .par_iter()
        .map(|doc| {
            let mut counts: HashMap<&str, u64> = HashMap::new();
            for t in &doc.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            counts
        })
        .collect();
    let mut stats: HashMap<String, TokenStats> = HashMap::new();
    for counts in per_doc {
        for (token, c) in counts {
            let e = stats.entry(token.to_string()).or_default();
            e.total_tf += c;
            e.df += 1;
        }
    }
    stats
}

/// TF-IDF as total term frequency over the natural log of document frequency.
/// Tokens confined to a single document (df <= 1) score 0 and are ineligible.
pub fn tfidf_score(stats: &TokenStats) -> f64 {
    if stats.df <= 1 {
        return 0.0;
    }
    stats.total_tf as f64 / (stats.df as f64).ln()
}

fn score_map(stats: &HashMap<String, TokenStats>) -> HashMap<String, f64> {
    stats
        .iter()
        .map(|(t, s)| (t.clone(), tfidf_score(s)))
        .collect()
}

/// The selected token set, ordered by score descending with lexicographic
/// tie-breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    entries: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    capacity: usize,
}

impl Vocabulary {
    /// Build directly from pre-ranked entries (used by the t-test baseline).
    pub fn from_ranked(entries: Vec<(String, f64)>, capacity: usize) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Vocabulary {
            entries,
            index,
            capacity,
        }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Entries in selection order.
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Tokens in selection order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(t, _)| t.as_str())
    }

    /// Number of merged tokens (arity >= 2) in the vocabulary.
    pub fn collocation_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(t, _)| token_arity(t) >= 2)
            .count()
    }
}

/// Keep the `capacity` highest-scoring tokens. Ties break by ascending token;
/// zero scores are excluded even when capacity remains.
pub fn select_top_p(scores: &HashMap<String, f64>, capacity: usize) -> Vocabulary {
    let mut ranked: Vec<(String, f64)> = scores
        .iter()
        .filter(|(_, &s)| s > 0.0)
        .map(|(t, &s)| (t.clone(), s))
        .collect();
    ranked.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(capacity);
    Vocabulary::from_ranked(ranked, capacity)
}

/// Count non-overlapping left-to-right occurrences of each eligible pair in
/// one document. Every consecutive pair with both components in the
/// vocabulary contributes; occurrences of the *same* pair may not overlap
/// (in `[a, a, a]` the pair `a-a` counts once).
fn doc_pair_counts<'a>(
    tokens: &'a [String],
    vocab: &Vocabulary,
) -> HashMap<(&'a str, &'a str), u64> {
    let mut counts: HashMap<(&str, &str), u64> = HashMap::new();
    let mut last_end: HashMap<(&str, &str), usize> = HashMap::new();
    for i in 0..tokens.len().saturating_sub(1) {
        let (left, right) = (tokens[i].as_str(), tokens[i + 1].as_str());
        if !vocab.contains(left) || !vocab.contains(right) {
            continue;
        }
        let key = (left, right);
        if last_end.get(&key).is_some_and(|&e| e > i) {
            continue;
        }
        *counts.entry(key).or_default() += 1;
        last_end.insert(key, i + 2);
    }
    counts
}

/// Stats for every candidate merged token formed from consecutive vocabulary
/// pairs. Original-token stats are left untouched.
pub fn score_pair_candidates(
    corpus: &Corpus,
    vocab: &Vocabulary,
) -> HashMap<String, TokenStats> {
    let per_doc: Vec<HashMap<(&str, &str), u64>> = corpus
        .docs
        .par_iter()
        .map(|doc| doc_pair_counts(&doc.tokens, vocab))
        .collect();
    let mut stats: HashMap<String, TokenStats> = HashMap::new();
    for counts in per_doc {
        for ((l, r), c) in counts {
            let e = stats.entry(merge_tokens(l, r)).or_default();
            e.total_tf += c;
            e.df += 1;
        }
    }
    stats
}

/// Joint stats over existing tokens and pair candidates, counted in a single
/// pass so document frequencies of colliding keys are exact unions.
fn joint_round_stats(corpus: &Corpus, vocab: &Vocabulary) -> HashMap<String, TokenStats> {
    let per_doc: Vec<HashMap<String, u64>> = corpus
        .docs
        .par_iter()
        .map(|doc| {
            let mut counts: HashMap<String, u64> = HashMap::new();
            for t in &doc.tokens {
                *counts.entry(t.clone()).or_default() += 1;
            }
            for ((l, r), c) in doc_pair_counts(&doc.tokens, vocab) {
                *counts.entry(merge_tokens(l, r)).or_default() += c;
            }
            counts
        })
        .collect();
    let mut stats: HashMap<String, TokenStats> = HashMap::new();
    for counts in per_doc {
        for (token, c) in counts {
            let e = stats.entry(token).or_default();
            e.total_tf += c;
            e.df += 1;
        }
    }
    stats
}

/// Rewrite each document in a greedy left-to-right pass: whenever the
/// concatenation of the next two tokens is in the vocabulary, emit the merged
/// token and skip both. Replacements never overlap.
pub fn replace_pairs(corpus: &Corpus, vocab: &Vocabulary) -> Corpus {
    let docs = corpus
        .docs
        .par_iter()
        .map(|doc| {
            let tokens = &doc.tokens;
            let mut out = Vec::with_capacity(tokens.len());
            let mut i = 0;
            while i < tokens.len() {
                if i + 1 < tokens.len() {
                    let merged = merge_tokens(&tokens[i], &tokens[i + 1]);
                    if vocab.contains(&merged) {
                        out.push(merged);
                        i += 2;
                        continue;
                    }
                }
                out.push(tokens[i].clone());
                i += 1;
            }
            TokenizedDocument {
                id: doc.id.clone(),
                tokens: out,
            }
        })
        .collect();
    Corpus::new(docs)
}

/// Parameters for [`preprocess`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessParams {
    /// Number of concatenation rounds; merged tokens span at most 2^rounds words.
    pub rounds: u32,
    /// Vocabulary capacity P.
    pub vocab_size: usize,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        PreprocessParams {
            rounds: 1,
            vocab_size: 5000,
        }
    }
}

/// Full preprocessing: initial top-P selection over individual words, then
/// `rounds` iterations of candidate scoring, joint re-selection, and pair
/// replacement, then a final re-selection on the rewritten corpus. With
/// `rounds == 0` the corpus is returned unchanged alongside the plain top-P
/// vocabulary.
pub fn preprocess(corpus: &Corpus, params: &PreprocessParams) -> (Corpus, Vocabulary) {
    let stats = compute_token_stats(corpus);
    let mut vocab = select_top_p(&score_map(&stats), params.vocab_size);
    if params.rounds == 0 {
        return (corpus.clone(), vocab);
    }
    let mut current = corpus.clone();
    for _ in 0..params.rounds {
        let joint = joint_round_stats(&current, &vocab);
        vocab = select_top_p(&score_map(&joint), params.vocab_size);
        current = replace_pairs(&current, &vocab);
    }
    // Component tokens lose occurrences to the merges, so the vocabulary is
    // re-selected from scratch on the rewritten corpus.
    let final_stats = compute_token_stats(&current);
    let final_vocab = select_top_p(&score_map(&final_stats), params.vocab_size);
    (current, final_vocab)
}

/// Top-n bigrams by Student's t-score over the corpus token stream, ranked
/// descending with lexicographic tie-breaks. Adjacency counts use a sliding
/// window within each document.
pub fn ttest_bigrams(corpus: &Corpus, n: usize) -> Vec<(String, f64)> {
    let total = corpus.total_tokens();
    if total == 0 {
        return Vec::new();
    }
    let t_total = total as f64;
    let mut unigrams: HashMap<&str, u64> = HashMap::new();
    let mut bigrams: HashMap<(&str, &str), u64> = HashMap::new();
    for doc in &corpus.docs {
        for t in &doc.tokens {
            *unigrams.entry(t.as_str()).or_default() += 1;
        }
        for w in doc.tokens.windows(2) {
            *bigrams.entry((w[0].as_str(), w[1].as_str())).or_default() += 1;
        }
    }
    let mut scored: Vec<(String, f64)> = bigrams
        .into_iter()
        .map(|((w1, w2), c12)| {
            let x_bar = c12 as f64 / t_total;
            let mu = (unigrams[w1] as f64 / t_total) * (unigrams[w2] as f64 / t_total);
            let t = (x_bar - mu) / (x_bar / t_total).sqrt();
            (merge_tokens(w1, w2), t)
        })
        .collect();
    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("t-scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    scored.truncate(n);
    scored
}

/// Write a vocabulary file: one `token<TAB>score` line per entry, scores with
/// six decimal places, in selection order.
pub fn write_vocabulary(vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (token, score) in vocab.entries() {
        out.push_str(token);
        out.push('\t');
        out.push_str(&format!("{score:.6}"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
