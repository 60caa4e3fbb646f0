//! Seeded synthetic data with known ground truth: a topic corpus with
//! planted collocations for end-to-end runs, and a small planted-pairs
//! matrix for structure-recovery checks.
//!
//! The topic corpus is built so that merging collocations matters: three
//! topic groups share the word "network" through their collocations, group
//! unigrams are noisy indicators, and the collocation words themselves occur
//! only inside their collocations. Left as individual words, the shared word
//! bridges otherwise independent groups; merged, each group keeps a tight
//! token of its own.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bow::DocTermMatrix;
use crate::corpus::RawDocument;

/// One planted topic group: its unigrams and optional two-word collocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopicGroupTruth {
    pub name: String,
    pub unigrams: Vec<String>,
    pub pair: Option<(String, String)>,
}

/// Everything the generator planted, for use as a test oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub n_docs: usize,
    pub groups: Vec<TopicGroupTruth>,
    /// Three-word collocation planted in the first group.
    pub trigram: (String, String, String),
    /// The always-adjacent bigram expected to top the t-test ranking.
    pub ttest_target: (String, String),
    /// Word shared by several collocations across groups.
    pub shared_word: String,
    pub filler_words: Vec<String>,
}

impl GroundTruth {
    /// Merged surfaces of the planted two-word collocations.
    pub fn bigram_surfaces(&self) -> Vec<String> {
        self.groups
            .iter()
            .filter_map(|g| g.pair.as_ref())
            .map(|(a, b)| format!("{a}-{b}"))
            .collect()
    }

    /// Merged surfaces containing the shared word.
    pub fn shared_word_surfaces(&self) -> Vec<String> {
        self.groups
            .iter()
            .filter_map(|g| g.pair.as_ref())
            .filter(|(a, b)| *a == self.shared_word || *b == self.shared_word)
            .map(|(a, b)| format!("{a}-{b}"))
            .collect()
    }

    pub fn trigram_surface(&self) -> String {
        format!("{}-{}-{}", self.trigram.0, self.trigram.1, self.trigram.2)
    }
}

fn groups() -> Vec<TopicGroupTruth> {
    let g = |name: &str, unigrams: &[&str], pair: Option<(&str, &str)>| TopicGroupTruth {
        name: name.to_string(),
        unigrams: unigrams.iter().map(|s| s.to_string()).collect(),
        pair: pair.map(|(a, b)| (a.to_string(), b.to_string())),
    };
    vec![
        g(
            "neural",
            &["gradient", "layer", "training"],
            Some(("neural", "network")),
        ),
        g(
            "social",
            &["community", "friend", "media"],
            Some(("social", "network")),
        ),
        g(
            "bayesian",
            &["prior", "posterior", "inference"],
            Some(("bayesian", "network")),
        ),
        g("market", &["trade", "price", "economy", "finance"], None),
    ]
}

const FILLERS: &[&str] = &[
    "paper", "result", "method", "approach", "analysis", "section", "figure", "table",
    "example", "discussion", "general", "common", "standard", "typical", "various",
    "several", "overall", "detail", "context", "summary",
];

/// Probability that a topic group is active in a document.
const GROUP_ACTIVITY: f64 = 0.25;
/// Probability that an active group emits each of its unigrams.
const UNIGRAM_RELIABILITY: f64 = 0.5;
/// Background probability of a unigram outside its group.
const UNIGRAM_BACKGROUND: f64 = 0.05;

/// Generate the bundled synthetic corpus.
///
/// Topic groups activate independently per document. An active group always
/// emits its collocation (adjacently; the collocation words never occur
/// elsewhere) and emits each unigram with probability 1/2; inactive groups
/// leak unigrams at a small background rate. The first group also plants a
/// three-word collocation, and fillers add uncorrelated mass.
pub fn generate_topic_corpus(seed: u64, n_docs: usize) -> (Vec<RawDocument>, GroundTruth) {
    let groups = groups();
    let truth = GroundTruth {
        seed,
        n_docs,
        groups: groups.clone(),
        trigram: ("deep".to_string(), "neural".to_string(), "network".to_string()),
        ttest_target: ("neural".to_string(), "network".to_string()),
        shared_word: "network".to_string(),
        filler_words: FILLERS.iter().map(|s| s.to_string()).collect(),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let mut units: Vec<Vec<&str>> = Vec::new();
        for (gi, group) in groups.iter().enumerate() {
            let active = rng.gen_bool(GROUP_ACTIVITY);
            if active {
                if let Some((left, right)) = &group.pair {
                    let reps = if gi == 0 { 3 } else { 2 };
                    for _ in 0..reps {
                        units.push(vec![left, right]);
                    }
                }
                if gi == 0 {
                    for _ in 0..2 {
                        units.push(vec!["deep", "neural", "network"]);
                    }
                }
            }
            let emit_p = if active {
                UNIGRAM_RELIABILITY
            } else {
                UNIGRAM_BACKGROUND
            };
            for w in &group.unigrams {
                if rng.gen_bool(emit_p) {
                    units.push(vec![w, w]);
                }
            }
        }
        for _ in 0..rng.gen_range(4..=7) {
            units.push(vec![FILLERS[rng.gen_range(0..FILLERS.len())]]);
        }
        units.shuffle(&mut rng);
        let text = units.concat().join(" ");
        docs.push(RawDocument {
            id: format!("doc{d:04}"),
            text,
        });
    }
    (docs, truth)
}

/// A four-word binary matrix with two planted pairs: words of a pair follow
/// a shared coin with `noise` flip probability, and the pairs are
/// independent. Returns the matrix and the generating partition (groups and
/// group list sorted).
pub fn planted_pairs_matrix(
    seed: u64,
    n_docs: usize,
    noise: f64,
) -> (DocTermMatrix, Vec<Vec<String>>) {
    let tokens = ["alpha", "bravo", "charlie", "delta"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut presence = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let z1 = rng.gen_bool(0.5);
        let z2 = rng.gen_bool(0.5);
        let mut present = Vec::new();
        for (i, &z) in [z1, z1, z2, z2].iter().enumerate() {
            let value = if rng.gen_bool(noise) { !z } else { z };
            if value {
                present.push(i);
            }
        }
        presence.push(present);
    }
    let matrix = DocTermMatrix {
        doc_ids: (0..n_docs).map(|d| format!("d{d}")).collect(),
        tokens: tokens.iter().map(|t| t.to_string()).collect(),
        presence,
    };
    let truth = vec![
        vec!["alpha".to_string(), "bravo".to_string()],
        vec!["charlie".to_string(), "delta".to_string()],
    ];
    (matrix, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize_all, NormalizationConfig};

    #[test]
    fn corpus_is_deterministic_for_a_seed() {
        let (a, _) = generate_topic_corpus(11, 40);
        let (b, _) = generate_topic_corpus(11, 40);
        assert_eq!(a, b);
        let (c, _) = generate_topic_corpus(12, 40);
        assert_ne!(a, c);
    }

    #[test]
    fn collocation_words_are_always_adjacent() {
        let (docs, truth) = generate_topic_corpus(5, 120);
        let corpus = tokenize_all(&docs, &NormalizationConfig::new(), false);
        for doc in &corpus.docs {
            for (i, t) in doc.tokens.iter().enumerate() {
                for g in &truth.groups {
                    // A pair's left word is always followed by its right word.
                    if let Some((left, right)) = &g.pair {
                        if t == left {
                            assert_eq!(&doc.tokens[i + 1], right, "doc {}", doc.id);
                        }
                    }
                }
                if *t == truth.trigram.0 {
                    assert_eq!(doc.tokens[i + 1], truth.trigram.1);
                    assert_eq!(doc.tokens[i + 2], truth.trigram.2);
                }
            }
        }
    }

    #[test]
    fn each_pair_occurs_in_many_documents() {
        let (docs, truth) = generate_topic_corpus(9, 300);
        let corpus = tokenize_all(&docs, &NormalizationConfig::new(), false);
        for g in &truth.groups {
            let Some((left, right)) = &g.pair else {
                continue;
            };
            let with_pair = corpus
                .docs
                .iter()
                .filter(|d| {
                    d.tokens
                        .windows(2)
                        .any(|w| &w[0] == left && &w[1] == right)
                })
                .count();
            // Expected activity is a quarter of the corpus.
            assert!(
                with_pair >= corpus.len() / 7,
                "{}: {} of {}",
                g.name,
                with_pair,
                corpus.len()
            );
        }
    }

    #[test]
    fn generator_words_survive_default_normalization() {
        let (docs, _) = generate_topic_corpus(2, 20);
        let corpus = tokenize_all(&docs, &NormalizationConfig::new(), false);
        for (raw, doc) in docs.iter().zip(&corpus.docs) {
            if raw.text.is_empty() {
                assert!(doc.tokens.is_empty());
            } else {
                assert_eq!(raw.text.split(' ').count(), doc.tokens.len());
            }
        }
    }

    #[test]
    fn planted_pairs_matrix_shape() {
        let (m, truth) = planted_pairs_matrix(1, 500, 0.05);
        assert_eq!(m.n_docs(), 500);
        assert_eq!(m.n_tokens(), 4);
        assert_eq!(truth.len(), 2);
        // Pair columns agree far more often than cross-pair columns.
        let agree = |a: usize, b: usize| {
            (0..m.n_docs())
                .filter(|&d| m.is_present(d, a) == m.is_present(d, b))
                .count()
        };
        assert!(agree(0, 1) > 400);
        assert!(agree(2, 3) > 400);
        assert!(agree(0, 2) < 350);
    }
}
