//! Binary bag-of-words: a documents-by-tokens presence matrix and its file
//! format.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::colloc::Vocabulary;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Presence matrix over documents and vocabulary tokens. Token order matches
/// vocabulary selection order, document order matches the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub doc_ids: Vec<String>,
    pub tokens: Vec<String>,
    /// Per document, the ascending indices of tokens present at least once.
    pub presence: Vec<Vec<usize>>,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn token_index(&self, token: &str) -> Option<usize> {
        self.tokens.iter().position(|t| t == token)
    }

    pub fn is_present(&self, doc: usize, token_idx: usize) -> bool {
        self.presence[doc].binary_search(&token_idx).is_ok()
    }

    /// Number of documents containing the token at `token_idx`.
    pub fn doc_frequency(&self, token_idx: usize) -> usize {
        self.presence
            .iter()
            .filter(|p| p.binary_search(&token_idx).is_ok())
            .count()
    }
}

/// Mark token `i` present in document `d` iff it occurs there at least once.
/// Corpus tokens outside the vocabulary are ignored.
pub fn build_binary_bow(corpus: &Corpus, vocab: &Vocabulary) -> DocTermMatrix {
    let index: HashMap<&str, usize> = vocab
        .tokens()
        .enumerate()
        .map(|(i, t)| (t, i))
        .collect();
    let presence: Vec<Vec<usize>> = corpus
        .docs
        .par_iter()
        .map(|doc| {
            let mut present: Vec<usize> = doc
                .tokens
                .iter()
                .filter_map(|t| index.get(t.as_str()).copied())
                .collect();
            present.sort_unstable();
            present.dedup();
            present
        })
        .collect();
    DocTermMatrix {
        doc_ids: corpus.docs.iter().map(|d| d.id.clone()).collect(),
        tokens: vocab.tokens().map(str::to_string).collect(),
        presence,
    }
}

/// Write the matrix file: `num_docs<SP>num_tokens`, a tab-separated token
/// line, then one `doc_id<TAB>index index ...` line per document.
pub fn write_matrix(matrix: &DocTermMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("{} {}\n", matrix.n_docs(), matrix.n_tokens()));
    out.push_str(&matrix.tokens.join("\t"));
    out.push('\n');
    for (id, present) in matrix.doc_ids.iter().zip(&matrix.presence) {
        out.push_str(id);
        out.push('\t');
        let indices: Vec<String> = present.iter().map(usize::to_string).collect();
        out.push_str(&indices.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix(path: &Path) -> Result<DocTermMatrix> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |line: usize, message: &str| Error::MalformedLine {
        path: path.to_path_buf(),
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
    let mut parts = header.split(' ');
    let n_docs: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(1, "bad document count"))?;
    let n_tokens: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| malformed(1, "bad token count"))?;
    let token_line = lines.next().ok_or_else(|| malformed(2, "missing token line"))?;
    let tokens: Vec<String> = if token_line.is_empty() {
        Vec::new()
    } else {
        token_line.split('\t').map(str::to_string).collect()
    };
    if tokens.len() != n_tokens {
        return Err(malformed(2, "token count does not match header"));
    }
    let mut doc_ids = Vec::with_capacity(n_docs);
    let mut presence = Vec::with_capacity(n_docs);
    for (i, line) in lines.enumerate() {
        let lineno = i + 3;
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| malformed(lineno, "missing tab after document id"))?;
        let mut indices = Vec::new();
        for piece in rest.split(' ').filter(|p| !p.is_empty()) {
            let idx: usize = piece
                .parse()
                .map_err(|_| malformed(lineno, "bad token index"))?;
            if idx >= n_tokens {
                return Err(malformed(lineno, "token index out of range"));
            }
            indices.push(idx);
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(malformed(lineno, "indices not strictly ascending"));
        }
        doc_ids.push(id.to_string());
        presence.push(indices);
    }
    if doc_ids.len() != n_docs {
        return Err(malformed(
            doc_ids.len() + 2,
            "document count does not match header",
        ));
    }
    Ok(DocTermMatrix {
        doc_ids,
        tokens,
        presence,
    })
}
