//! Latent tree models over binary variables: exact two-pass inference,
//! pairwise marginals, mutual information, and topic extraction.
//!
//! A model is a rooted tree whose leaves are observed word variables and
//! whose internal nodes are latent topic variables. The root carries a
//! marginal distribution and every other node a 2x2 conditional table given
//! its parent; the product of those tables is the joint distribution.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Row-sum tolerance for distributions stored in a model.
const DIST_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Latent,
    Word,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: String,
    pub name: String,
    pub kind: NodeKind,
    /// Index of the parent node, `None` for the root.
    pub parent: Option<usize>,
    /// 0 for words, >= 1 for latent variables.
    pub level: u32,
}

/// Conditional table indexed as `cpt[parent_value][child_value]`.
pub type Cpt = [[f64; 2]; 2];

const ROOT_CPT_PLACEHOLDER: Cpt = [[1.0, 0.0], [0.0, 1.0]];

/// A (possibly partial) assignment of binary values to nodes, keyed by id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: BTreeMap<String, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, bool)>) -> Self {
        let mut a = Assignment::new();
        for (id, v) in pairs {
            a.set(id, v);
        }
        a
    }

    pub fn set(&mut self, id: &str, value: bool) {
        self.values.insert(id.to_string(), value);
    }

    pub fn get(&self, id: &str) -> Option<bool> {
        self.values.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

/// A topic: a latent variable characterized by its highest-MI descendant
/// words (at most seven), mutual information descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Topic {
    pub latent_id: String,
    pub level: u32,
    pub words: Vec<(String, f64)>,
}

/// Maximum number of words used to characterize a topic.
pub const TOPIC_WORD_CAP: usize = 7;

#[derive(Debug, Clone)]
pub struct LatentTreeModel {
    nodes: Vec<Node>,
    children: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
    root: usize,
    root_marginal: [f64; 2],
    cpts: Vec<Cpt>,
}

/// Incremental model construction; `build` validates all invariants.
#[derive(Debug, Default)]
pub struct ModelBuilder {
    nodes: Vec<Node>,
    cpts: Vec<Cpt>,
    root_marginal: Option<[f64; 2]>,
    parents: Vec<Option<String>>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add the root latent node with its marginal distribution.
    pub fn root(mut self, id: &str, level: u32, marginal: [f64; 2]) -> Self {
        self.nodes.push(Node {
            id: id.to_string(),
            name: id.to_string(),
            kind: NodeKind::Latent,
            parent: None,
            level,
        });
        self.cpts.push(ROOT_CPT_PLACEHOLDER);
        self.parents.push(None);
        self.root_marginal = Some(marginal);
        self
    }

    /// Add a latent node under `parent`.
    pub fn latent(mut self, id: &str, parent: &str, level: u32, cpt: Cpt) -> Self {
        self.nodes.push(Node {
            id: id.to_string(),
            name: id.to_string(),
            kind: NodeKind::Latent,
            parent: None,
            level,
        });
        self.cpts.push(cpt);
        self.parents.push(Some(parent.to_string()));
        self
    }

    /// Add a word leaf under `parent`.
    pub fn word(mut self, id: &str, parent: &str, cpt: Cpt) -> Self {
        self.nodes.push(Node {
            id: id.to_string(),
            name: id.to_string(),
            kind: NodeKind::Word,
            parent: None,
            level: 0,
        });
        self.cpts.push(cpt);
        self.parents.push(Some(parent.to_string()));
        self
    }

    pub fn build(self) -> Result<LatentTreeModel> {
        let ModelBuilder {
            mut nodes,
            cpts,
            root_marginal,
            parents,
        } = self;
        let root_marginal =
            root_marginal.ok_or_else(|| Error::InvalidModel("no root node".into()))?;
        let mut index = HashMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate node id {:?}", node.id)));
            }
        }
        for (i, parent_id) in parents.iter().enumerate() {
            if let Some(pid) = parent_id {
                let p = *index
                    .get(pid)
                    .ok_or_else(|| Error::InvalidModel(format!("unknown parent {pid:?}")))?;
                nodes[i].parent = Some(p);
            }
        }
        LatentTreeModel::from_parts(nodes, index, root_marginal, cpts)
    }
}

impl LatentTreeModel {
    fn from_parts(
        nodes: Vec<Node>,
        index: HashMap<String, usize>,
        root_marginal: [f64; 2],
        cpts: Vec<Cpt>,
    ) -> Result<Self> {
        let n = nodes.len();
        let roots: Vec<usize> = (0..n).filter(|&i| nodes[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidModel(format!(
                "expected exactly one parentless node, found {}",
                roots.len()
            )));
        }
        let root = roots[0];
        if nodes[root].kind != NodeKind::Latent {
            return Err(Error::InvalidModel("root must be a latent node".into()));
        }
        let mut children = vec![Vec::new(); n];
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                children[p].push(i);
            }
        }
        let model = LatentTreeModel {
            nodes,
            children,
            index,
            root,
            root_marginal,
            cpts,
        };
        model.validate()?;
        Ok(model)
    }

    /// Check every structural and numeric invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        // Reachability from the root doubles as the acyclicity check: with
        // one parent per non-root node there are n-1 edges, so reaching all
        // nodes means the graph is a tree.
        let order = self.topo_order();
        if order.len() != n {
            return Err(Error::InvalidModel(
                "graph is not connected to the root".into(),
            ));
        }
        check_dist(&self.root_marginal, "root marginal")?;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.kind == NodeKind::Word {
                if !self.children[i].is_empty() {
                    return Err(Error::InvalidModel(format!(
                        "word node {:?} has children",
                        node.id
                    )));
                }
                if node.level != 0 {
                    return Err(Error::InvalidModel(format!(
                        "word node {:?} has level {}",
                        node.id, node.level
                    )));
                }
            }
            if i != self.root {
                for row in &self.cpts[i] {
                    check_dist(row, &format!("cpt row of {:?}", node.id))?;
                }
            }
        }
        Ok(())
    }

    /// Parents-before-children node order, children visited in insertion order.
    fn topo_order(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            order.push(v);
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        order
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root_id(&self) -> &str {
        &self.nodes[self.root].id
    }

    pub fn root_marginal(&self) -> [f64; 2] {
        self.root_marginal
    }

    pub fn node_by_id(&self, id: &str) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn parent_id(&self, id: &str) -> Option<&str> {
        let node = self.node_by_id(id)?;
        node.parent.map(|p| self.nodes[p].id.as_str())
    }

    pub fn children_ids(&self, id: &str) -> Vec<&str> {
        match self.index.get(id) {
            Some(&i) => self.children[i]
                .iter()
                .map(|&c| self.nodes[c].id.as_str())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Conditional table of a non-root node.
    pub fn cpt(&self, id: &str) -> Option<&Cpt> {
        let &i = self.index.get(id)?;
        if i == self.root {
            None
        } else {
            Some(&self.cpts[i])
        }
    }

    /// Latent ids in node order.
    pub fn latent_ids(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Latent)
            .map(|n| n.id.as_str())
            .collect()
    }

    /// Word names in node order.
    pub fn word_names(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Word)
            .map(|n| n.name.as_str())
            .collect()
    }

    fn node_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownNode { id: id.to_string() })
    }

    /// Probability of a full assignment: the product of the root marginal
    /// term and one conditional term per non-root node.
    pub fn joint_probability(&self, assignment: &Assignment) -> Result<f64> {
        let mut values = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            match assignment.get(&node.id) {
                Some(v) => values[i] = v as usize,
                None => {
                    return Err(Error::PartialAssignment {
                        id: node.id.clone(),
                    })
                }
            }
        }
        let mut p = self.root_marginal[values[self.root]];
        for (i, node) in self.nodes.iter().enumerate() {
            if let Some(parent) = node.parent {
                p *= self.cpts[i][values[parent]][values[i]];
            }
        }
        Ok(p)
    }

    /// Prior marginal of every node by a single root-to-leaves pass.
    pub fn prior_marginals(&self) -> Vec<[f64; 2]> {
        let mut m = vec![[0.0f64; 2]; self.nodes.len()];
        m[self.root] = self.root_marginal;
        for &v in &self.topo_order() {
            for &c in &self.children[v] {
                let cpt = &self.cpts[c];
                for x in 0..2 {
                    m[c][x] = m[v][0] * cpt[0][x] + m[v][1] * cpt[1][x];
                }
            }
        }
        m
    }

    /// Exact posterior P(Z = 1 | evidence) for every latent node, by a
    /// leaf-to-root then root-to-leaf message schedule. Evidence may cover
    /// any subset of the word nodes; an empty assignment yields priors.
    pub fn infer_posteriors(&self, evidence: &Assignment) -> Result<BTreeMap<String, f64>> {
        let beliefs = self.node_posteriors(evidence)?;
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.kind == NodeKind::Latent)
            .map(|(i, n)| (n.id.clone(), beliefs[i][1]))
            .collect())
    }

    /// Posterior distribution of every node given word evidence.
    pub fn node_posteriors(&self, evidence: &Assignment) -> Result<Vec<[f64; 2]>> {
        let n = self.nodes.len();
        let mut observed: Vec<Option<bool>> = vec![None; n];
        for (id, value) in evidence.iter() {
            let i = self.node_index(id)?;
            if self.nodes[i].kind == NodeKind::Latent {
                return Err(Error::LatentEvidence { id: id.to_string() });
            }
            observed[i] = Some(value);
        }

        let order = self.topo_order();
        // Upward pass: lambda[v] is the (normalized) likelihood of the
        // evidence in v's subtree for each value of v; lambda_msg[v] is the
        // message v sends to its parent.
        let mut lambda = vec![[1.0f64; 2]; n];
        let mut lambda_msg = vec![[1.0f64; 2]; n];
        for &v in order.iter().rev() {
            let mut lam = match observed[v] {
                Some(true) => [0.0, 1.0],
                Some(false) => [1.0, 0.0],
                None => [1.0, 1.0],
            };
            for &c in &self.children[v] {
                lam[0] *= lambda_msg[c][0];
                lam[1] *= lambda_msg[c][1];
            }
            let s = lam[0] + lam[1];
            if s == 0.0 {
                return Err(Error::ZeroProbabilityEvidence);
            }
            lambda[v] = [lam[0] / s, lam[1] / s];
            if v != self.root {
                let cpt = &self.cpts[v];
                for x in 0..2 {
                    lambda_msg[v][x] =
                        cpt[x][0] * lambda[v][0] + cpt[x][1] * lambda[v][1];
                }
            }
        }

        // Downward pass: pi[v] carries the evidence outside v's subtree. A
        // child's incoming message excludes that child's own contribution,
        // computed with prefix/suffix products rather than division so
        // deterministic tables cannot produce 0/0.
        let mut pi = vec![[0.0f64; 2]; n];
        pi[self.root] = self.root_marginal;
        let mut beliefs = vec![[0.0f64; 2]; n];
        for &v in &order {
            let b = [pi[v][0] * lambda[v][0], pi[v][1] * lambda[v][1]];
            let s = b[0] + b[1];
            if s == 0.0 {
                return Err(Error::ZeroProbabilityEvidence);
            }
            beliefs[v] = [b[0] / s, b[1] / s];

            let kids = &self.children[v];
            if kids.is_empty() {
                continue;
            }
            let own = match observed[v] {
                Some(true) => [0.0, 1.0],
                Some(false) => [1.0, 0.0],
                None => [1.0, 1.0],
            };
            let k = kids.len();
            let mut prefix = vec![[1.0f64; 2]; k + 1];
            for (i, &c) in kids.iter().enumerate() {
                prefix[i + 1] = [
                    prefix[i][0] * lambda_msg[c][0],
                    prefix[i][1] * lambda_msg[c][1],
                ];
            }
            let mut suffix = vec![[1.0f64; 2]; k + 1];
            for (i, &c) in kids.iter().enumerate().rev() {
                suffix[i] = [
                    suffix[i + 1][0] * lambda_msg[c][0],
                    suffix[i + 1][1] * lambda_msg[c][1],
                ];
            }
            for (i, &c) in kids.iter().enumerate() {
                let ex = [
                    pi[v][0] * own[0] * prefix[i][0] * suffix[i + 1][0],
                    pi[v][1] * own[1] * prefix[i][1] * suffix[i + 1][1],
                ];
                let cpt = &self.cpts[c];
                let mut msg = [0.0f64; 2];
                for xc in 0..2 {
                    msg[xc] = ex[0] * cpt[0][xc] + ex[1] * cpt[1][xc];
                }
                let s = msg[0] + msg[1];
                pi[c] = if s == 0.0 { msg } else { [msg[0] / s, msg[1] / s] };
            }
        }
        Ok(beliefs)
    }

    /// Exact joint distribution P(A, B) of two distinct nodes, obtained by
    /// chaining conditionals along the unique tree path between them.
    pub fn pairwise_marginal(&self, id_a: &str, id_b: &str) -> Result<[[f64; 2]; 2]> {
        let marginals = self.prior_marginals();
        self.pairwise_marginal_with(&marginals, id_a, id_b)
    }

    fn pairwise_marginal_with(
        &self,
        marginals: &[[f64; 2]],
        id_a: &str,
        id_b: &str,
    ) -> Result<[[f64; 2]; 2]> {
        let a = self.node_index(id_a)?;
        let b = self.node_index(id_b)?;
        if a == b {
            return Err(Error::InvalidParameter(
                "pairwise marginal needs two distinct nodes".into(),
            ));
        }
        let path = self.path_between(a, b);
        // M[x_a][x_cur] = P(cur = x_cur | a = x_a), folded along the path.
        let mut m = [[1.0, 0.0], [0.0, 1.0]];
        for w in path.windows(2) {
            let t = self.step_conditional(marginals, w[0], w[1]);
            let mut next = [[0.0f64; 2]; 2];
            for xa in 0..2 {
                for xv in 0..2 {
                    next[xa][xv] = m[xa][0] * t[0][xv] + m[xa][1] * t[1][xv];
                }
            }
            m = next;
        }
        let mut joint = [[0.0f64; 2]; 2];
        for xa in 0..2 {
            for xb in 0..2 {
                joint[xa][xb] = marginals[a][xa] * m[xa][xb];
            }
        }
        Ok(joint)
    }

    /// Conditional P(v | u) for adjacent nodes; child edges read the table
    /// directly and parent edges invert it with Bayes' rule. A zero marginal
    /// value of `u` yields a zero row, which only multiplies zero-mass paths.
    fn step_conditional(&self, marginals: &[[f64; 2]], u: usize, v: usize) -> Cpt {
        if self.nodes[v].parent == Some(u) {
            return self.cpts[v];
        }
        debug_assert_eq!(self.nodes[u].parent, Some(v));
        let cpt_u = &self.cpts[u];
        let mut t = [[0.0f64; 2]; 2];
        for xu in 0..2 {
            if marginals[u][xu] == 0.0 {
                continue;
            }
            for xv in 0..2 {
                t[xu][xv] = cpt_u[xv][xu] * marginals[v][xv] / marginals[u][xu];
            }
        }
        t
    }

    /// Nodes on the path from `a` to `b`, inclusive.
    fn path_between(&self, a: usize, b: usize) -> Vec<usize> {
        let up = |mut v: usize| {
            let mut chain = vec![v];
            while let Some(p) = self.nodes[v].parent {
                chain.push(p);
                v = p;
            }
            chain
        };
        let chain_a = up(a);
        let chain_b = up(b);
        let depth_a: HashMap<usize, usize> =
            chain_a.iter().enumerate().map(|(d, &v)| (v, d)).collect();
        let mut lca_at_b = 0;
        for (d, &v) in chain_b.iter().enumerate() {
            if depth_a.contains_key(&v) {
                lca_at_b = d;
                break;
            }
        }
        let lca = chain_b[lca_at_b];
        let mut path: Vec<usize> = chain_a[..=depth_a[&lca]].to_vec();
        for &v in chain_b[..lca_at_b].iter().rev() {
            path.push(v);
        }
        path
    }

    /// Word leaves in the subtree under `id`, in node order.
    pub fn descendant_words(&self, id: &str) -> Result<Vec<&str>> {
        let start = self.node_index(id)?;
        let mut words = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if self.nodes[v].kind == NodeKind::Word {
                words.push(self.nodes[v].name.as_str());
            }
            for &c in self.children[v].iter().rev() {
                stack.push(c);
            }
        }
        Ok(words)
    }

    /// One topic per latent node: its descendant words ranked by
    /// model-based mutual information, capped at seven.
    pub fn extract_topics(&self) -> Vec<Topic> {
        let marginals = self.prior_marginals();
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Latent)
            .map(|latent| {
                let words = self
                    .descendant_words(&latent.id)
                    .expect("latent id exists");
                let mut scored: Vec<(String, f64)> = words
                    .iter()
                    .map(|w| {
                        let joint = self
                            .pairwise_marginal_with(&marginals, &latent.id, w)
                            .expect("descendant exists");
                        let mi = mutual_information(&joint)
                            .expect("model joint is a distribution");
                        (w.to_string(), mi)
                    })
                    .collect();
                scored.sort_by(|a, b| {
                    b.1.partial_cmp(&a.1)
                        .expect("mi is finite")
                        .then_with(|| a.0.cmp(&b.0))
                });
                scored.truncate(TOPIC_WORD_CAP);
                Topic {
                    latent_id: latent.id.clone(),
                    level: latent.level,
                    words: scored,
                }
            })
            .collect()
    }

    /// Deterministic JSON serialization with probabilities at 12 significant
    /// digits.
    pub fn to_json_string(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n  \"nodes\": [\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let kind = match node.kind {
                NodeKind::Latent => "latent",
                NodeKind::Word => "word",
            };
            let parent = match node.parent {
                Some(p) => serde_json::to_string(&self.nodes[p].id).unwrap(),
                None => "null".to_string(),
            };
            out.push_str(&format!(
                "    {{\"id\": {}, \"name\": {}, \"kind\": \"{}\", \"parent\": {}, \"level\": {}}}{}\n",
                serde_json::to_string(&node.id).unwrap(),
                serde_json::to_string(&node.name).unwrap(),
                kind,
                parent,
                node.level,
                if i + 1 < self.nodes.len() { "," } else { "" }
            ));
        }
        out.push_str("  ],\n");
        out.push_str(&format!(
            "  \"root_marginal\": [{}, {}],\n",
            fmt_prob(self.root_marginal[0]),
            fmt_prob(self.root_marginal[1])
        ));
        out.push_str("  \"cpts\": {\n");
        let non_root: Vec<usize> = (0..self.nodes.len()).filter(|&i| i != self.root).collect();
        for (k, &i) in non_root.iter().enumerate() {
            let c = &self.cpts[i];
            out.push_str(&format!(
                "    {}: [[{}, {}], [{}, {}]]{}\n",
                serde_json::to_string(&self.nodes[i].id).unwrap(),
                fmt_prob(c[0][0]),
                fmt_prob(c[0][1]),
                fmt_prob(c[1][0]),
                fmt_prob(c[1][1]),
                if k + 1 < non_root.len() { "," } else { "" }
            ));
        }
        out.push_str("  }\n}\n");
        out
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel(format!("bad model json: {e}")))?;
        let mut builder_nodes = Vec::with_capacity(file.nodes.len());
        let mut cpts = Vec::with_capacity(file.nodes.len());
        let mut index = HashMap::new();
        let mut used_cpts = 0usize;
        for (i, rec) in file.nodes.iter().enumerate() {
            let kind = match rec.kind.as_str() {
                "latent" => NodeKind::Latent,
                "word" => NodeKind::Word,
                other => {
                    return Err(Error::InvalidModel(format!("unknown node kind {other:?}")))
                }
            };
            if index.insert(rec.id.clone(), i).is_some() {
                return Err(Error::InvalidModel(format!("duplicate node id {:?}", rec.id)));
            }
            builder_nodes.push(Node {
                id: rec.id.clone(),
                name: rec.name.clone(),
                kind,
                parent: None,
                level: rec.level,
            });
            if rec.parent.is_some() {
                let cpt = file.cpts.get(&rec.id).ok_or_else(|| {
                    Error::InvalidModel(format!("missing cpt for node {:?}", rec.id))
                })?;
                cpts.push(*cpt);
                used_cpts += 1;
            } else {
                cpts.push(ROOT_CPT_PLACEHOLDER);
            }
        }
        if used_cpts != file.cpts.len() {
            return Err(Error::InvalidModel(
                "cpts present for nodes not in the model".into(),
            ));
        }
        for (i, rec) in file.nodes.iter().enumerate() {
            if let Some(pid) = &rec.parent {
                let p = *index
                    .get(pid)
                    .ok_or_else(|| Error::InvalidModel(format!("unknown parent {pid:?}")))?;
                builder_nodes[i].parent = Some(p);
            }
        }
        LatentTreeModel::from_parts(builder_nodes, index, file.root_marginal, cpts)
    }
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.11e}")
}

fn check_dist(dist: &[f64; 2], what: &str) -> Result<()> {
    if dist.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidDistribution(format!(
            "{what} has entries outside [0, 1]"
        )));
    }
    if ((dist[0] + dist[1]) - 1.0).abs() > DIST_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what} does not sum to 1"
        )));
    }
    Ok(())
}

#[derive(Deserialize)]
struct ModelFile {
    nodes: Vec<NodeRecord>,
    root_marginal: [f64; 2],
    cpts: HashMap<String, Cpt>,
}

#[derive(Deserialize)]
struct NodeRecord {
    id: String,
    name: String,
    kind: String,
    parent: Option<String>,
    level: u32,
}

pub fn write_model(model: &LatentTreeModel, path: &Path) -> Result<()> {
    fs::write(path, model.to_json_string()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_model(path: &Path) -> Result<LatentTreeModel> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LatentTreeModel::from_json_str(&text)
}

/// Mutual information in nats of a 2x2 joint distribution, with the usual
/// 0 ln 0 = 0 convention. Rejects negative entries and tables whose mass is
/// off by more than 1e-9.
pub fn mutual_information(joint: &[[f64; 2]; 2]) -> Result<f64> {
    let mut sum = 0.0;
    for row in joint {
        for &p in row {
            if p < 0.0 {
                return Err(Error::InvalidDistribution(
                    "joint has a negative entry".into(),
                ));
            }
            sum += p;
        }
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(
            "joint does not sum to 1".into(),
        ));
    }
    let pa = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
    let pb = [joint[0][0] + joint[1][0], joint[0][1] + joint[1][1]];
    let mut mi = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[a][b];
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).ln();
            }
        }
    }
    // Tiny negative values are floating-point noise around independence.
    Ok(mi.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Z -> W with P(Z=1) = 0.6, P(W=1|Z=1) = 0.9, P(W=1|Z=0) = 0.2.
    fn chain_model() -> LatentTreeModel {
        ModelBuilder::new()
            .root("Z", 1, [0.4, 0.6])
            .word("w", "Z", [[0.8, 0.2], [0.1, 0.9]])
            .build()
            .unwrap()
    }

    #[test]
    fn joint_of_single_latent() {
        let m = ModelBuilder::new().root("Z", 1, [0.4, 0.6]).build().unwrap();
        let p = m
            .joint_probability(&Assignment::from_pairs([("Z", true)]))
            .unwrap();
        assert!((p - 0.6).abs() < 1e-15);
    }

    #[test]
    fn joint_of_chain() {
        let m = chain_model();
        let p = m
            .joint_probability(&Assignment::from_pairs([("Z", true), ("w", true)]))
            .unwrap();
        assert!((p - 0.54).abs() < 1e-15);
    }

    #[test]
    fn joint_rejects_partial_assignment() {
        let m = chain_model();
        let err = m
            .joint_probability(&Assignment::from_pairs([("Z", true)]))
            .unwrap_err();
        assert!(matches!(err, Error::PartialAssignment { .. }));
    }

    fn random_model(rng: &mut ChaCha8Rng, n: usize) -> LatentTreeModel {
        let mut b = ModelBuilder::new();
        let p1: f64 = rng.gen_range(0.05..0.95);
        b = b.root("n0", 1, [1.0 - p1, p1]);
        let mut latents = vec!["n0".to_string()];
        for i in 1..n {
            let id = format!("n{i}");
            let parent = latents[rng.gen_range(0..latents.len())].clone();
            let mut cpt = [[0.0; 2]; 2];
            for row in &mut cpt {
                let q: f64 = rng.gen_range(0.05..0.95);
                *row = [1.0 - q, q];
            }
            // Keep the last node latent-free so some words always exist.
            if rng.gen_bool(0.5) && i + 1 < n {
                b = b.latent(&id, &parent, 1, cpt);
                latents.push(id);
            } else {
                b = b.word(&id, &parent, cpt);
            }
        }
        b.build().unwrap()
    }

    fn enumerate_assignments(m: &LatentTreeModel) -> Vec<(Assignment, f64)> {
        let ids: Vec<String> = m.nodes().iter().map(|n| n.id.clone()).collect();
        let n = ids.len();
        (0..(1usize << n))
            .map(|mask| {
                let a = Assignment::from_pairs(
                    ids.iter()
                        .enumerate()
                        .map(|(i, id)| (id.as_str(), mask >> i & 1 == 1)),
                );
                let p = m.joint_probability(&a).unwrap();
                (a, p)
            })
            .collect()
    }

    #[test]
    fn joint_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let n = rng.gen_range(2..9);
            let m = random_model(&mut rng, n);
            let total: f64 = enumerate_assignments(&m).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn posterior_of_chain() {
        let m = chain_model();
        let post = m
            .infer_posteriors(&Assignment::from_pairs([("w", true)]))
            .unwrap();
        assert!((post["Z"] - 0.54 / 0.62).abs() < 1e-12);
    }

    #[test]
    fn empty_evidence_gives_priors() {
        let m = chain_model();
        let post = m.infer_posteriors(&Assignment::new()).unwrap();
        assert!((post["Z"] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn deterministic_cpt_gives_certain_posterior() {
        let m = ModelBuilder::new()
            .root("Z", 1, [0.4, 0.6])
            .word("w", "Z", [[1.0, 0.0], [0.0, 1.0]])
            .build()
            .unwrap();
        let post = m
            .infer_posteriors(&Assignment::from_pairs([("w", true)]))
            .unwrap();
        assert!((post["Z"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn latent_evidence_is_rejected() {
        let m = chain_model();
        let err = m
            .infer_posteriors(&Assignment::from_pairs([("Z", true)]))
            .unwrap_err();
        assert!(matches!(err, Error::LatentEvidence { .. }));
    }

    #[test]
    fn impossible_evidence_is_reported() {
        let m = ModelBuilder::new()
            .root("Z", 1, [0.0, 1.0])
            .word("w", "Z", [[1.0, 0.0], [1.0, 0.0]])
            .build()
            .unwrap();
        let err = m
            .infer_posteriors(&Assignment::from_pairs([("w", true)]))
            .unwrap_err();
        assert!(matches!(err, Error::ZeroProbabilityEvidence));
    }

    #[test]
    fn posteriors_match_brute_force_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let n = rng.gen_range(3..10);
            let m = random_model(&mut rng, n);
            let words: Vec<String> =
                m.word_names().iter().map(|w| w.to_string()).collect();
            let mut picks: Vec<(&str, bool)> = Vec::new();
            for w in &words {
                if rng.gen_bool(0.6) {
                    picks.push((w.as_str(), rng.gen_bool(0.5)));
                }
            }
            let evidence = Assignment::from_pairs(picks);
            let table = enumerate_assignments(&m);
            let pe: f64 = table
                .iter()
                .filter(|(a, _)| {
                    evidence.iter().all(|(id, v)| a.get(id) == Some(v))
                })
                .map(|(_, p)| p)
                .sum();
            if pe == 0.0 {
                continue;
            }
            let post = m.infer_posteriors(&evidence).unwrap();
            for (latent, &got) in &post {
                let num: f64 = table
                    .iter()
                    .filter(|(a, _)| {
                        a.get(latent) == Some(true)
                            && evidence.iter().all(|(id, v)| a.get(id) == Some(v))
                    })
                    .map(|(_, p)| p)
                    .sum();
                assert!(
                    (got - num / pe).abs() < 1e-9,
                    "latent {latent}: {got} vs {}",
                    num / pe
                );
            }
        }
    }

    #[test]
    fn empty_evidence_agrees_with_downward_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let n = rng.gen_range(2..12);
            let m = random_model(&mut rng, n);
            let beliefs = m.node_posteriors(&Assignment::new()).unwrap();
            let priors = m.prior_marginals();
            for (b, p) in beliefs.iter().zip(&priors) {
                assert!((b[1] - p[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_of_chain() {
        let m = chain_model();
        let j = m.pairwise_marginal("Z", "w").unwrap();
        assert!((j[1][1] - 0.54).abs() < 1e-12);
        assert!((j[1][0] - 0.06).abs() < 1e-12);
        assert!((j[0][1] - 0.08).abs() < 1e-12);
        assert!((j[0][0] - 0.32).abs() < 1e-12);
    }

    #[test]
    fn pairwise_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let n = rng.gen_range(3..10);
            let m = random_model(&mut rng, n);
            let ids: Vec<String> = m.nodes().iter().map(|x| x.id.clone()).collect();
            let table = enumerate_assignments(&m);
            for _ in 0..3 {
                let a = &ids[rng.gen_range(0..ids.len())];
                let b = &ids[rng.gen_range(0..ids.len())];
                if a == b {
                    continue;
                }
                let joint = m.pairwise_marginal(a, b).unwrap();
                let mut total = 0.0;
                for xa in 0..2 {
                    for xb in 0..2 {
                        let expect: f64 = table
                            .iter()
                            .filter(|(asg, _)| {
                                asg.get(a) == Some(xa == 1) && asg.get(b) == Some(xb == 1)
                            })
                            .map(|(_, p)| p)
                            .sum();
                        assert!(
                            (joint[xa][xb] - expect).abs() < 1e-9,
                            "({a},{b}) entry {xa}{xb}"
                        );
                        total += joint[xa][xb];
                    }
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pairwise_marginalizes_to_priors() {
        let m = chain_model();
        let j = m.pairwise_marginal("Z", "w").unwrap();
        let prior_z = j[1][0] + j[1][1];
        let post = m.infer_posteriors(&Assignment::new()).unwrap();
        assert!((prior_z - post["Z"]).abs() < 1e-12);
    }

    #[test]
    fn mi_of_independent_joint_is_zero() {
        let j = [[0.3 * 0.7, 0.3 * 0.3], [0.7 * 0.7, 0.7 * 0.3]];
        assert!(mutual_information(&j).unwrap() < 1e-12);
    }

    #[test]
    fn mi_of_perfect_correlation_is_ln2() {
        let j = [[0.5, 0.0], [0.0, 0.5]];
        let mi = mutual_information(&j).unwrap();
        assert!((mi - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn mi_direct_formula_value() {
        let j = [[0.4, 0.1], [0.1, 0.4]];
        let mi = mutual_information(&j).unwrap();
        assert!((mi - 0.192745).abs() < 1e-6);
    }

    #[test]
    fn mi_is_symmetric_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let raw: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = raw.iter().sum();
            let j = [[raw[0] / s, raw[1] / s], [raw[2] / s, raw[3] / s]];
            let jt = [[j[0][0], j[1][0]], [j[0][1], j[1][1]]];
            let mi = mutual_information(&j).unwrap();
            let mit = mutual_information(&jt).unwrap();
            assert!(mi >= 0.0);
            assert!(mi <= std::f64::consts::LN_2 + 1e-12);
            assert!((mi - mit).abs() < 1e-12);
        }
    }

    #[test]
    fn mi_rejects_bad_tables() {
        assert!(mutual_information(&[[0.5, 0.5], [0.5, 0.5]]).is_err());
        assert!(mutual_information(&[[-0.1, 0.6], [0.3, 0.2]]).is_err());
    }

    fn star_model(cpts: &[(&str, Cpt)]) -> LatentTreeModel {
        let mut b = ModelBuilder::new().root("Z", 1, [0.5, 0.5]);
        for (w, cpt) in cpts {
            b = b.word(w, "Z", *cpt);
        }
        b.build().unwrap()
    }

    #[test]
    fn topics_keep_all_words_when_fewer_than_cap() {
        let strong: Cpt = [[0.9, 0.1], [0.1, 0.9]];
        let m = star_model(&[("aaa", strong), ("bbb", strong), ("ccc", strong)]);
        let topics = m.extract_topics();
        assert_eq!(topics.len(), 1);
        assert_eq!(topics[0].words.len(), 3);
    }

    #[test]
    fn topics_rank_by_mutual_information() {
        let near_det: Cpt = [[0.99, 0.01], [0.01, 0.99]];
        let near_indep: Cpt = [[0.51, 0.49], [0.49, 0.51]];
        let m = star_model(&[("loose", near_indep), ("tight", near_det)]);
        let t = &m.extract_topics()[0];
        assert_eq!(t.words[0].0, "tight");
        assert!(t.words[0].1 > t.words[1].1);
    }

    #[test]
    fn topics_break_mi_ties_lexicographically() {
        let cpt: Cpt = [[0.8, 0.2], [0.2, 0.8]];
        let m = star_model(&[("bbb", cpt), ("aaa", cpt)]);
        let t = &m.extract_topics()[0];
        assert_eq!(t.words[0].0, "aaa");
        assert_eq!(t.words[1].0, "bbb");
    }

    #[test]
    fn topics_cap_at_seven_words() {
        let cpt: Cpt = [[0.8, 0.2], [0.2, 0.8]];
        let words: Vec<(String, Cpt)> =
            (0..9).map(|i| (format!("w{i}"), cpt)).collect();
        let refs: Vec<(&str, Cpt)> =
            words.iter().map(|(w, c)| (w.as_str(), *c)).collect();
        let m = star_model(&refs);
        assert_eq!(m.extract_topics()[0].words.len(), 7);
    }

    #[test]
    fn model_json_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10 {
            let n = rng.gen_range(2..10);
            let m = random_model(&mut rng, n);
            let text = m.to_json_string();
            let back = LatentTreeModel::from_json_str(&text).unwrap();
            assert_eq!(back.to_json_string(), text);
            // Probabilities survive at 12 significant digits.
            for (a, b) in m.prior_marginals().iter().zip(back.prior_marginals()) {
                assert!((a[1] - b[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn model_file_round_trips_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        let m = chain_model();
        write_model(&m, &p).unwrap();
        let back = read_model(&p).unwrap();
        assert_eq!(back.to_json_string(), m.to_json_string());
    }

    #[test]
    fn invalid_models_are_rejected() {
        // CPT row does not sum to 1.
        let err = ModelBuilder::new()
            .root("Z", 1, [0.5, 0.5])
            .word("w", "Z", [[0.7, 0.7], [0.5, 0.5]])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
        // Unknown parent.
        let err = ModelBuilder::new()
            .root("Z", 1, [0.5, 0.5])
            .word("w", "missing", [[0.5, 0.5], [0.5, 0.5]])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
        // No root at all.
        let err = ModelBuilder::new().build().unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn malformed_json_is_reported() {
        assert!(LatentTreeModel::from_json_str("{not json").is_err());
    }
}
