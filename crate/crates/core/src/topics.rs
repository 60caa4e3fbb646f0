//! Topic hierarchy rendering and per-document topic memberships.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::bow::DocTermMatrix;
use crate::error::{Error, Result};
use crate::ltm::{mutual_information, Assignment, LatentTreeModel, NodeKind, Topic};

/// The extracted topics arranged by the model's tree structure.
#[derive(Debug, Clone)]
pub struct TopicHierarchy {
    /// Topics keyed by latent id.
    pub topics: BTreeMap<String, Topic>,
    pub root: String,
    /// Latent children of each latent, in model order.
    pub children: BTreeMap<String, Vec<String>>,
    /// Latent ids per level, highest level first.
    pub levels: Vec<(u32, Vec<String>)>,
}

/// Arrange `extract_topics` output into the model's parent-child structure.
pub fn render_hierarchy(model: &LatentTreeModel) -> TopicHierarchy {
    hierarchy_from_topics(model, model.extract_topics())
}

/// Arrange pre-extracted topics (one per latent) into the model structure.
pub fn hierarchy_from_topics(model: &LatentTreeModel, topics: Vec<Topic>) -> TopicHierarchy {
    let topics: BTreeMap<String, Topic> = topics
        .into_iter()
        .map(|t| (t.latent_id.clone(), t))
        .collect();
    let mut children = BTreeMap::new();
    let mut by_level: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for id in model.latent_ids() {
        let latent_kids: Vec<String> = model
            .children_ids(id)
            .into_iter()
            .filter(|c| {
                model
                    .node_by_id(c)
                    .is_some_and(|n| n.kind == NodeKind::Latent)
            })
            .map(str::to_string)
            .collect();
        children.insert(id.to_string(), latent_kids);
        let level = model.node_by_id(id).expect("latent exists").level;
        by_level.entry(level).or_default().push(id.to_string());
    }
    let levels = by_level.into_iter().rev().collect();
    TopicHierarchy {
        topics,
        root: model.root_id().to_string(),
        children,
        levels,
    }
}

impl TopicHierarchy {
    /// Latent ids in depth-first order from the root.
    pub fn depth_first(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root.clone(), 0usize)];
        while let Some((id, depth)) = stack.pop() {
            out.push((id.clone(), depth));
            if let Some(kids) = self.children.get(&id) {
                for kid in kids.iter().rev() {
                    stack.push((kid.clone(), depth + 1));
                }
            }
        }
        out
    }

    /// One topic per line, children indented under parents depth-first:
    /// `level<TAB>indent latent<TAB>word:mi ...` with MI at four decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, depth) in self.depth_first() {
            let topic = &self.topics[&id];
            let words: Vec<String> = topic
                .words
                .iter()
                .map(|(w, mi)| format!("{w}:{mi:.4}"))
                .collect();
            out.push_str(&format!(
                "{}\t{}{}\t{}\n",
                topic.level,
                "  ".repeat(depth),
                id,
                words.join(" ")
            ));
        }
        out
    }
}

pub fn write_hierarchy(hierarchy: &TopicHierarchy, path: &Path) -> Result<()> {
    fs::write(path, hierarchy.to_text()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// P(Z = 1 | document) for every latent and document.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipTable {
    pub doc_ids: Vec<String>,
    pub latent_ids: Vec<String>,
    /// values[doc][latent]
    pub values: Vec<Vec<f64>>,
}

/// Posterior topic memberships: each document observes every matrix token as
/// present (1) or absent (0), and the word evidence is propagated through
/// the model. Matrix tokens must all be word nodes of the model.
pub fn compute_memberships(
    model: &LatentTreeModel,
    matrix: &DocTermMatrix,
) -> Result<MembershipTable> {
    for token in &matrix.tokens {
        match model.node_by_id(token) {
            Some(node) if node.kind == NodeKind::Word => {}
            _ => {
                return Err(Error::UnknownToken {
                    token: token.clone(),
                })
            }
        }
    }
    let latent_ids: Vec<String> = model.latent_ids().iter().map(|s| s.to_string()).collect();
    let values: Vec<Vec<f64>> = matrix
        .presence
        .par_iter()
        .map(|present| {
            let evidence = Assignment::from_pairs(
                matrix
                    .tokens
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.as_str(), present.binary_search(&i).is_ok())),
            );
            let posteriors = model.infer_posteriors(&evidence)?;
            Ok(latent_ids.iter().map(|id| posteriors[id]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(MembershipTable {
        doc_ids: matrix.doc_ids.clone(),
        latent_ids,
        values,
    })
}

/// Membership file: a tab-separated header of latent ids, then one
/// `doc_id<TAB>p ...` row per document at four decimal places.
pub fn write_memberships(table: &MembershipTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("doc_id\t");
    out.push_str(&table.latent_ids.join("\t"));
    out.push('\n');
    for (id, row) in table.doc_ids.iter().zip(&table.values) {
        out.push_str(id);
        for v in row {
            out.push_str(&format!("\t{v:.4}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Empirical-MI topic extraction: ranks a latent's descendant words by the
/// mutual information of the soft empirical joint between the latent's
/// posterior membership and word presence, instead of the model joint.
pub fn extract_topics_empirical(
    model: &LatentTreeModel,
    matrix: &DocTermMatrix,
) -> Result<Vec<Topic>> {
    let memberships = compute_memberships(model, matrix)?;
    let n = matrix.n_docs() as f64;
    if matrix.n_docs() == 0 {
        return Err(Error::EmptyData("matrix has no documents".into()));
    }
    let latent_pos: BTreeMap<&str, usize> = memberships
        .latent_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut topics = Vec::new();
    for latent in model.latent_ids() {
        let level = model.node_by_id(latent).expect("latent exists").level;
        let col = latent_pos[latent];
        let mut scored: Vec<(String, f64)> = Vec::new();
        for word in model.descendant_words(latent)? {
            let w_idx = matrix
                .token_index(word)
                .ok_or_else(|| Error::UnknownToken {
                    token: word.to_string(),
                })?;
            let mut joint = [[0.0f64; 2]; 2];
            for (doc, present) in matrix.presence.iter().enumerate() {
                let p1 = memberships.values[doc][col];
                let x = present.binary_search(&w_idx).is_ok() as usize;
                joint[1][x] += p1;
                joint[0][x] += 1.0 - p1;
            }
            for row in &mut joint {
                for cell in row.iter_mut() {
                    *cell /= n;
                }
            }
            let mi = mutual_information(&joint)?;
            scored.push((word.to_string(), mi));
        }
        scored.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("mi is finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        scored.truncate(crate::ltm::TOPIC_WORD_CAP);
        topics.push(Topic {
            latent_id: latent.to_string(),
            level,
            words: scored,
        });
    }
    Ok(topics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltm::{Cpt, ModelBuilder};

    fn tight() -> Cpt {
        [[0.9, 0.1], [0.1, 0.9]]
    }

    /// Root Z2 with child latent Z1; words under both.
    fn chain_model() -> LatentTreeModel {
        ModelBuilder::new()
            .root("Z2", 2, [0.5, 0.5])
            .latent("Z1", "Z2", 1, tight())
            .word("apple", "Z1", tight())
            .word("berry", "Z1", tight())
            .word("cloud", "Z2", tight())
            .build()
            .unwrap()
    }

    fn matrix_of(tokens: &[&str], docs: &[&[usize]]) -> DocTermMatrix {
        DocTermMatrix {
            doc_ids: (0..docs.len()).map(|d| format!("d{d}")).collect(),
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            presence: docs.iter().map(|p| p.to_vec()).collect(),
        }
    }

    #[test]
    fn hierarchy_indents_children_under_parents() {
        let h = render_hierarchy(&chain_model());
        let text = h.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("2\tZ2\t"));
        assert!(lines[1].starts_with("1\t  Z1\t"));
        // Rendering is a pure view over extract_topics.
        let topics = chain_model().extract_topics();
        let z1 = topics.iter().find(|t| t.latent_id == "Z1").unwrap();
        assert_eq!(&h.topics["Z1"], z1);
    }

    #[test]
    fn hierarchy_levels_are_descending() {
        let h = render_hierarchy(&chain_model());
        let levels: Vec<u32> = h.levels.iter().map(|(l, _)| *l).collect();
        assert_eq!(levels, vec![2, 1]);
    }

    #[test]
    fn memberships_match_enumeration_on_small_model() {
        let model = chain_model();
        let matrix = matrix_of(
            &["apple", "berry", "cloud"],
            &[&[0, 1], &[2], &[0, 1, 2], &[]],
        );
        let table = compute_memberships(&model, &matrix).unwrap();
        assert_eq!(table.values.len(), 4);
        for (doc, present) in matrix.presence.iter().enumerate() {
            let evidence = Assignment::from_pairs(matrix.tokens.iter().enumerate().map(
                |(i, t)| (t.as_str(), present.binary_search(&i).is_ok()),
            ));
            let direct = model.infer_posteriors(&evidence).unwrap();
            for (k, latent) in table.latent_ids.iter().enumerate() {
                assert!((table.values[doc][k] - direct[latent]).abs() < 1e-12);
            }
        }
        // A document with both Z1 words present leans into that topic.
        let z1 = table.latent_ids.iter().position(|l| l == "Z1").unwrap();
        assert!(table.values[0][z1] > 0.5);
    }

    #[test]
    fn document_can_belong_to_two_sibling_topics() {
        let model = ModelBuilder::new()
            .root("R", 2, [0.5, 0.5])
            .latent("A", "R", 1, [[0.95, 0.05], [0.05, 0.95]])
            .latent("B", "R", 1, [[0.95, 0.05], [0.05, 0.95]])
            .word("water", "A", tight())
            .word("river", "A", tight())
            .word("stone", "B", tight())
            .word("cliff", "B", tight())
            .build()
            .unwrap();
        let matrix = matrix_of(&["water", "river", "stone", "cliff"], &[&[0, 1, 2, 3]]);
        let table = compute_memberships(&model, &matrix).unwrap();
        let idx = |id: &str| table.latent_ids.iter().position(|l| l == id).unwrap();
        assert!(table.values[0][idx("A")] > 0.5);
        assert!(table.values[0][idx("B")] > 0.5);
    }

    #[test]
    fn memberships_of_empty_matrix_are_empty() {
        let model = chain_model();
        let matrix = matrix_of(&["apple", "berry", "cloud"], &[]);
        let table = compute_memberships(&model, &matrix).unwrap();
        assert!(table.values.is_empty());
        assert_eq!(table.latent_ids.len(), 2);
    }

    #[test]
    fn memberships_reject_unknown_tokens() {
        let model = chain_model();
        let matrix = matrix_of(&["apple", "rogue"], &[&[0]]);
        assert!(matches!(
            compute_memberships(&model, &matrix),
            Err(Error::UnknownToken { .. })
        ));
    }

    #[test]
    fn membership_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("members.txt");
        let table = MembershipTable {
            doc_ids: vec!["a".into()],
            latent_ids: vec!["Z1.1".into(), "Z2.1".into()],
            values: vec![vec![0.25, 0.75]],
        };
        write_memberships(&table, &p).unwrap();
        let got = fs::read_to_string(&p).unwrap();
        assert_eq!(got, "doc_id\tZ1.1\tZ2.1\na\t0.2500\t0.7500\n");
    }

    #[test]
    fn empirical_topics_rank_signal_words_first() {
        // Word "apple" tracks Z1 in the data; "noise" is independent.
        let model = ModelBuilder::new()
            .root("Z1", 1, [0.5, 0.5])
            .word("apple", "Z1", [[0.99, 0.01], [0.01, 0.99]])
            .word("noise", "Z1", [[0.5, 0.5], [0.5, 0.5]])
            .build()
            .unwrap();
        let docs: Vec<Vec<usize>> = (0..40)
            .map(|d| {
                let mut p = Vec::new();
                if d % 2 == 0 {
                    p.push(0);
                }
                if d % 3 == 0 {
                    p.push(1);
                }
                p
            })
            .collect();
        let refs: Vec<&[usize]> = docs.iter().map(|d| d.as_slice()).collect();
        let matrix = matrix_of(&["apple", "noise"], &refs);
        let topics = extract_topics_empirical(&model, &matrix).unwrap();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].words[0].0, "apple");
        assert!(topics[0].words[0].1 > topics[0].words[1].1);
    }
}
