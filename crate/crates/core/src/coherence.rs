//! Document co-occurrence coherence for topics.
//!
//! The score of a topic sums, over ordered pairs of its top-M words,
//! the log of (co-document frequency + 1) over the document frequency of
//! the earlier word. Topics with fewer than M words are excluded from the
//! corpus-level average.

use std::fs;
use std::path::Path;

use crate::bow::DocTermMatrix;
use crate::error::{Error, Result};
use crate::ltm::Topic;

/// Scoring options: how many top words enter the sum and whether the log
/// form is used. The log-free variant sums the raw ratios instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceParams {
    pub top_m: usize,
    pub log_form: bool,
}

impl Default for CoherenceParams {
    fn default() -> Self {
        CoherenceParams {
            top_m: 4,
            log_form: true,
        }
    }
}

/// Number of documents containing both tokens. With `wi == wj` this is the
/// plain document frequency.
pub fn co_document_frequency(matrix: &DocTermMatrix, wi: &str, wj: &str) -> Result<usize> {
    let i = matrix
        .token_index(wi)
        .ok_or_else(|| Error::UnknownToken { token: wi.into() })?;
    let j = matrix
        .token_index(wj)
        .ok_or_else(|| Error::UnknownToken { token: wj.into() })?;
    Ok(matrix
        .presence
        .iter()
        .filter(|p| p.binary_search(&i).is_ok() && p.binary_search(&j).is_ok())
        .count())
}

/// Coherence of one topic over its top-M words in MI order. Errors when the
/// topic has fewer than M words or a needed document frequency is zero.
pub fn topic_coherence(
    topic: &Topic,
    matrix: &DocTermMatrix,
    params: &CoherenceParams,
) -> Result<f64> {
    let m = params.top_m;
    if topic.words.len() < m {
        return Err(Error::TooFewTopicWords {
            latent: topic.latent_id.clone(),
            got: topic.words.len(),
            need: m,
        });
    }
    let words: Vec<&str> = topic.words[..m].iter().map(|(w, _)| w.as_str()).collect();
    let mut df = vec![0usize; m];
    for (j, w) in words.iter().enumerate().take(m.saturating_sub(1)) {
        df[j] = co_document_frequency(matrix, w, w)?;
        if df[j] == 0 {
            return Err(Error::ZeroDocumentFrequency { token: w.to_string() });
        }
    }
    let mut total = 0.0;
    for i in 1..m {
        for j in 0..i {
            let co = co_document_frequency(matrix, words[i], words[j])? as f64;
            let ratio = (co + 1.0) / df[j] as f64;
            total += if params.log_form { ratio.ln() } else { ratio };
        }
    }
    Ok(total)
}

/// Corpus-level coherence: per-topic scores plus the average over topics
/// with at least M words.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    /// One entry per input topic; None marks an excluded topic.
    pub topic_scores: Vec<(String, Option<f64>)>,
    pub included: usize,
    pub excluded: usize,
    /// None when no topic was scorable.
    pub average: Option<f64>,
}

/// Score every topic, excluding those with fewer than M words, and average
/// the rest. An empty inclusion set yields an explicit no-average report.
pub fn average_coherence(
    topics: &[Topic],
    matrix: &DocTermMatrix,
    params: &CoherenceParams,
) -> Result<CoherenceReport> {
    let mut topic_scores = Vec::with_capacity(topics.len());
    let mut sum = 0.0;
    let mut included = 0;
    for topic in topics {
        if topic.words.len() < params.top_m {
            topic_scores.push((topic.latent_id.clone(), None));
            continue;
        }
        let score = topic_coherence(topic, matrix, params)?;
        topic_scores.push((topic.latent_id.clone(), Some(score)));
        sum += score;
        included += 1;
    }
    Ok(CoherenceReport {
        excluded: topics.len() - included,
        included,
        average: (included > 0).then(|| sum / included as f64),
        topic_scores,
    })
}

/// Text rendering: one `latent<TAB>score<TAB>status` line per topic and a
/// final AVERAGE line. Excluded topics and an empty average print `-`.
pub fn render_report(report: &CoherenceReport) -> String {
    let mut out = String::new();
    for (latent, score) in &report.topic_scores {
        match score {
            Some(s) => out.push_str(&format!("{latent}\t{s:.6}\tincluded\n")),
            None => out.push_str(&format!("{latent}\t-\texcluded\n")),
        }
    }
    match report.average {
        Some(avg) => out.push_str(&format!("AVERAGE\t{avg:.6}\t{}\n", report.included)),
        None => out.push_str("AVERAGE\t-\t0\n"),
    }
    out
}

pub fn write_report(report: &CoherenceReport, path: &Path) -> Result<()> {
    fs::write(path, render_report(report)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
