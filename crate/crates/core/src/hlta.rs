//! Level-wise learning of a latent tree model from a binary matrix.
//!
//! Each level groups mutually informative variables into islands, fits one
//! binary latent class model per island by EM, then hardens the latent
//! posteriors into the next level's data. Recursion stops when few enough
//! variables remain, which are capped under a single root. This is a
//! simplified level-wise builder, not a reimplementation of full
//! progressive-EM structure search.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bow::DocTermMatrix;
use crate::error::{Error, Result};
use crate::ltm::{mutual_information, Cpt, LatentTreeModel, ModelBuilder};

/// Posterior threshold when hardening latent values between levels.
pub const HARDEN_THRESHOLD: f64 = 0.5;

/// CPT entries of learned models are clamped into this interval so no
/// evidence pattern has probability zero.
pub const PROB_FLOOR: f64 = 1e-6;

/// One level of binary data: named variables over documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelData {
    pub names: Vec<String>,
    /// rows[doc][var]
    pub rows: Vec<Vec<bool>>,
    pub level: u32,
}

impl LevelData {
    pub fn from_matrix(matrix: &DocTermMatrix) -> Self {
        let n_tokens = matrix.n_tokens();
        let rows = matrix
            .presence
            .iter()
            .map(|present| {
                let mut row = vec![false; n_tokens];
                for &i in present {
                    row[i] = true;
                }
                row
            })
            .collect();
        LevelData {
            names: matrix.tokens.clone(),
            rows,
            level: 0,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn n_docs(&self) -> usize {
        self.rows.len()
    }
}

/// Learning parameters. All randomness flows from `seed` through a fixed
/// splitting scheme (per level, per island, per restart), so any component
/// can be re-run in isolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnParams {
    pub max_island_size: usize,
    pub em_restarts: usize,
    pub em_max_iters: usize,
    /// Relative change of the EM objective that counts as converged.
    pub em_tol: f64,
    /// Recursion stops once this few variables remain; they go under one root.
    pub top_level_max_vars: usize,
    pub seed: u64,
    /// Force sequential iteration everywhere. Results are identical either
    /// way; this only trades speed for single-threaded execution.
    pub strict_repro: bool,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            max_island_size: 7,
            em_restarts: 4,
            em_max_iters: 200,
            em_tol: 1e-4,
            top_level_max_vars: 15,
            seed: 0,
            strict_repro: false,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed derivation: fold each tag into the base with splitmix.
fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

const TAG_ISLAND_FIT: u64 = 1;
const TAG_ROOT_FIT: u64 = 2;
const TAG_RESTART: u64 = 3;

/// Empirical pairwise mutual information between all variable columns, from
/// add-one-smoothed 2x2 joints. Symmetric with a zero diagonal.
pub fn empirical_pairwise_mi(data: &LevelData) -> Vec<Vec<f64>> {
    let n = data.n_vars();
    let rows = &data.rows;
    let compute_row = |i: usize| -> Vec<f64> {
        let mut out = vec![0.0; n];
        for j in 0..n {
            if i == j {
                continue;
            }
            let mut counts = [[0u64; 2]; 2];
            for row in rows {
                counts[row[i] as usize][row[j] as usize] += 1;
            }
            let denom = (rows.len() + 4) as f64;
            let joint = [
                [
                    (counts[0][0] + 1) as f64 / denom,
                    (counts[0][1] + 1) as f64 / denom,
                ],
                [
                    (counts[1][0] + 1) as f64 / denom,
                    (counts[1][1] + 1) as f64 / denom,
                ],
            ];
            out[j] = mutual_information(&joint).expect("smoothed joint is a distribution");
        }
        out
    };
    (0..n).into_par_iter().map(compute_row).collect()
}

/// Partition variables into islands of mutually informative members.
///
/// Greedy agglomeration: seed with the highest-MI unassigned pair, then grow
/// with the unassigned variable of highest average MI to the members, as long
/// as the island stays under `max_island_size` and the candidate's best-MI
/// partner (among members and unassigned variables) is already a member. A
/// final leftover variable joins the island holding its best partner. All
/// ties break toward lower indices.
pub fn build_islands(mi: &[Vec<f64>], max_island_size: usize) -> Vec<Vec<usize>> {
    let n = mi.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![vec![0]];
    }
    let mut assigned = vec![false; n];
    let mut islands: Vec<Vec<usize>> = Vec::new();
    loop {
        let unassigned: Vec<usize> = (0..n).filter(|&v| !assigned[v]).collect();
        match unassigned.len() {
            0 => break,
            1 => {
                let v = unassigned[0];
                let partner = (0..n)
                    .filter(|&u| u != v)
                    .max_by(|&a, &b| {
                        mi[v][a]
                            .partial_cmp(&mi[v][b])
                            .expect("mi is finite")
                            .then(b.cmp(&a))
                    })
                    .expect("at least two variables");
                let island = islands
                    .iter_mut()
                    .find(|g| g.contains(&partner))
                    .expect("partner is assigned");
                island.push(v);
                island.sort_unstable();
                break;
            }
            _ => {}
        }

        // Seed: globally highest-MI unassigned pair, lowest indices on ties.
        let mut seed = (unassigned[0], unassigned[1]);
        let mut best = f64::NEG_INFINITY;
        for (ai, &a) in unassigned.iter().enumerate() {
            for &b in &unassigned[ai + 1..] {
                if mi[a][b] > best {
                    best = mi[a][b];
                    seed = (a, b);
                }
            }
        }
        let mut group = vec![seed.0, seed.1];
        assigned[seed.0] = true;
        assigned[seed.1] = true;

        while group.len() < max_island_size {
            let candidates: Vec<usize> = (0..n).filter(|&v| !assigned[v]).collect();
            if candidates.is_empty() {
                break;
            }
            let avg = |v: usize| group.iter().map(|&g| mi[v][g]).sum::<f64>() / group.len() as f64;
            let cand = *candidates
                .iter()
                .max_by(|&&a, &&b| {
                    avg(a)
                        .partial_cmp(&avg(b))
                        .expect("mi is finite")
                        .then(b.cmp(&a))
                })
                .expect("candidates nonempty");
            // Best-MI partner among still-active variables (the group plus
            // the unassigned, excluding the candidate itself).
            let partner = group
                .iter()
                .copied()
                .chain(candidates.iter().copied().filter(|&v| v != cand))
                .max_by(|&a, &b| {
                    mi[cand][a]
                        .partial_cmp(&mi[cand][b])
                        .expect("mi is finite")
                        .then(b.cmp(&a))
                })
                .expect("group nonempty");
            if !group.contains(&partner) {
                break;
            }
            group.push(cand);
            assigned[cand] = true;
        }
        group.sort_unstable();
        islands.push(group);
    }
    islands
}

/// A fitted binary latent class model over a subset of level variables.
#[derive(Debug, Clone)]
pub struct LcmFit {
    /// Indices of the member variables within the level.
    pub members: Vec<usize>,
    /// P(Y = 1) for the island latent.
    pub latent_p1: f64,
    /// Per member, `cpt[y][x] = P(member = x | Y = y)`.
    pub member_cpts: Vec<Cpt>,
    /// Data log-likelihood at the final parameters.
    pub final_log_likelihood: f64,
    /// EM iterations used by the winning restart.
    pub iterations: usize,
    /// Per-iteration values of the smoothed EM objective: data
    /// log-likelihood plus the Beta(2,2) log-prior implied by the +1
    /// pseudo-counts. This is the quantity the smoothed M-step provably
    /// never decreases.
    pub objective_trace: Vec<f64>,
}

impl LcmFit {
    /// P(Y = 1 | member values) for one data row of the fitted level.
    pub fn posterior(&self, row: &[bool]) -> f64 {
        let mut l1 = self.latent_p1;
        let mut l0 = 1.0 - self.latent_p1;
        for (m, &var) in self.members.iter().enumerate() {
            let x = row[var] as usize;
            l1 *= self.member_cpts[m][1][x];
            l0 *= self.member_cpts[m][0][x];
        }
        l1 / (l0 + l1)
    }
}

struct EmRun {
    theta: f64,
    q: Vec<[f64; 2]>,
    data_ll: f64,
    objective_trace: Vec<f64>,
    iterations: usize,
}

fn log_prior(theta: f64, q: &[[f64; 2]]) -> f64 {
    let beta22 = |p: f64| p.ln() + (1.0 - p).ln();
    beta22(theta) + q.iter().map(|m| beta22(m[0]) + beta22(m[1])).sum::<f64>()
}

fn em_once(
    patterns: &[(u64, u64)],
    n_members: usize,
    n_docs: f64,
    max_iters: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> EmRun {
    let mut theta: f64 = rng.gen_range(0.2..0.8);
    let mut q: Vec<[f64; 2]> = (0..n_members)
        .map(|_| [rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8)])
        .collect();

    let e_step = |theta: f64, q: &[[f64; 2]]| -> (Vec<f64>, f64) {
        let mut weights = Vec::with_capacity(patterns.len());
        let mut data_ll = 0.0;
        for &(mask, count) in patterns {
            let mut l1 = theta;
            let mut l0 = 1.0 - theta;
            for (m, qm) in q.iter().enumerate() {
                if mask >> m & 1 == 1 {
                    l1 *= qm[1];
                    l0 *= qm[0];
                } else {
                    l1 *= 1.0 - qm[1];
                    l0 *= 1.0 - qm[0];
                }
            }
            weights.push(l1 / (l0 + l1));
            data_ll += count as f64 * (l0 + l1).ln();
        }
        (weights, data_ll)
    };

    let (mut weights, mut data_ll) = e_step(theta, &q);
    let mut objective = data_ll + log_prior(theta, &q);
    let mut trace = vec![objective];
    let mut iterations = 0;
    for _ in 0..max_iters {
        // M-step with one pseudo-count per cell.
        let mut w1 = 0.0;
        for (&(_, count), &w) in patterns.iter().zip(&weights) {
            w1 += count as f64 * w;
        }
        let w0 = n_docs - w1;
        theta = (w1 + 1.0) / (n_docs + 2.0);
        for (m, qm) in q.iter_mut().enumerate() {
            let mut on1 = 0.0;
            let mut on0 = 0.0;
            for (&(mask, count), &w) in patterns.iter().zip(&weights) {
                if mask >> m & 1 == 1 {
                    on1 += count as f64 * w;
                    on0 += count as f64 * (1.0 - w);
                }
            }
            qm[1] = (on1 + 1.0) / (w1 + 2.0);
            qm[0] = (on0 + 1.0) / (w0 + 2.0);
        }
        iterations += 1;

        let (new_weights, new_data_ll) = e_step(theta, &q);
        weights = new_weights;
        data_ll = new_data_ll;
        let new_objective = data_ll + log_prior(theta, &q);
        trace.push(new_objective);
        let rel = (new_objective - objective).abs() / objective.abs().max(1.0);
        objective = new_objective;
        if rel < tol {
            break;
        }
    }
    EmRun {
        theta,
        q,
        data_ll,
        objective_trace: trace,
        iterations,
    }
}

/// Fit a binary latent class model over `members` by EM with random
/// restarts. The restart with the highest final data log-likelihood wins;
/// latent labels are normalized so P(first member = 1 | Y = 1) >=
/// P(first member = 1 | Y = 0).
pub fn fit_lcm_em(
    data: &LevelData,
    members: &[usize],
    params: &LearnParams,
    seed: u64,
) -> Result<LcmFit> {
    if members.is_empty() {
        return Err(Error::EmptyData("no member variables".into()));
    }
    if data.rows.is_empty() {
        return Err(Error::EmptyData("no documents".into()));
    }
    assert!(members.len() <= 63, "pattern mask limited to 63 members");

    // Identical member-value patterns are aggregated; EM iterations then
    // cost O(distinct patterns), and the fixed pattern order makes every
    // floating-point reduction independent of document order and threading.
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for row in &data.rows {
        let mut mask = 0u64;
        for (m, &var) in members.iter().enumerate() {
            if row[var] {
                mask |= 1 << m;
            }
        }
        *counts.entry(mask).or_default() += 1;
    }
    let patterns: Vec<(u64, u64)> = counts.into_iter().collect();
    let n_docs = data.rows.len() as f64;

    let mut best: Option<EmRun> = None;
    for restart in 0..params.em_restarts.max(1) {
        let restart_seed = derive_seed(seed, &[TAG_RESTART, restart as u64]);
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed);
        let run = em_once(
            &patterns,
            members.len(),
            n_docs,
            params.em_max_iters,
            params.em_tol,
            &mut rng,
        );
        let better = match &best {
            Some(b) => run.data_ll > b.data_ll,
            None => true,
        };
        if better {
            best = Some(run);
        }
    }
    let mut run = best.expect("at least one restart");

    // Resolve label symmetry.
    if run.q[0][1] < run.q[0][0] {
        run.theta = 1.0 - run.theta;
        for qm in &mut run.q {
            qm.swap(0, 1);
        }
    }

    let member_cpts = run
        .q
        .iter()
        .map(|qm| [[1.0 - qm[0], qm[0]], [1.0 - qm[1], qm[1]]])
        .collect();
    Ok(LcmFit {
        members: members.to_vec(),
        latent_p1: run.theta,
        member_cpts,
        final_log_likelihood: run.data_ll,
        iterations: run.iterations,
        objective_trace: run.objective_trace,
    })
}

/// Generated id for the `ordinal`-th latent variable of a level (1-based in
/// the rendered name).
pub fn latent_name(level: u32, ordinal: usize) -> String {
    format!("Z{}.{}", level, ordinal + 1)
}

/// Threshold the per-document latent posteriors of each fit into the next
/// level's binary data. Posteriors of exactly 0.5 harden to 1.
pub fn harden_level(data: &LevelData, fits: &[LcmFit]) -> LevelData {
    let level = data.level + 1;
    let names: Vec<String> = (0..fits.len()).map(|k| latent_name(level, k)).collect();
    let rows = data
        .rows
        .iter()
        .map(|row| {
            fits.iter()
                .map(|fit| fit.posterior(row) >= HARDEN_THRESHOLD)
                .collect()
        })
        .collect();
    LevelData { names, rows, level }
}

/// Per-level record of what the learner did.
#[derive(Debug, Clone)]
pub struct LevelLog {
    pub level: u32,
    pub n_vars: usize,
    pub islands: Vec<Vec<String>>,
    pub log_likelihoods: Vec<f64>,
}

/// Learn log: per-level variable counts, island partitions, and final
/// log-likelihoods, plus the root fit.
#[derive(Debug, Clone, Default)]
pub struct LearnLog {
    pub levels: Vec<LevelLog>,
    pub root_vars: usize,
    /// None when a single latent was promoted to the root without a fit.
    pub root_log_likelihood: Option<f64>,
}

impl LearnLog {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for lvl in &self.levels {
            out.push_str(&format!(
                "level {}: {} variables, {} islands\n",
                lvl.level,
                lvl.n_vars,
                lvl.islands.len()
            ));
            for (k, (island, ll)) in lvl.islands.iter().zip(&lvl.log_likelihoods).enumerate() {
                out.push_str(&format!(
                    "  island {} [{}] loglik {:.6}\n",
                    latent_name(lvl.level, k),
                    island.join(" "),
                    ll
                ));
            }
        }
        match self.root_log_likelihood {
            Some(ll) => out.push_str(&format!(
                "root: {} variables, loglik {:.6}\n",
                self.root_vars, ll
            )),
            None => out.push_str(&format!(
                "root: promoted single latent over {} variables\n",
                self.root_vars
            )),
        }
        out
    }
}

fn clamp_cpt(cpt: &Cpt) -> Cpt {
    let clamp = |p: f64| p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    [
        [clamp(cpt[0][0]), clamp(cpt[0][1])],
        [clamp(cpt[1][0]), clamp(cpt[1][1])],
    ]
}

struct PendingLatent {
    name: String,
    level: u32,
    marginal_p1: f64,
}

/// Learn a full hierarchy from a binary matrix. Level 1 always builds
/// islands over the word variables; recursion on hardened data stops when at
/// most `top_level_max_vars` variables remain (or islands collapse to a
/// single group), and the survivors are capped under one root.
pub fn learn_hierarchy(
    matrix: &DocTermMatrix,
    params: &LearnParams,
) -> Result<(LatentTreeModel, LearnLog)> {
    if matrix.n_tokens() < 2 {
        return Err(Error::TooFewVariables {
            need: 2,
            got: matrix.n_tokens(),
        });
    }
    if matrix.n_docs() == 0 {
        return Err(Error::EmptyData("matrix has no documents".into()));
    }

    let mut data = LevelData::from_matrix(matrix);
    let mut log = LearnLog::default();
    // child name -> (parent name, cpt)
    let mut edges: HashMap<String, (String, Cpt)> = HashMap::new();
    let mut latents: Vec<PendingLatent> = Vec::new();
    let root_spec: (String, u32, f64);

    loop {
        let level = data.level + 1;
        let mi = empirical_pairwise_mi(&data);
        let islands = build_islands(&mi, params.max_island_size);

        if islands.len() == 1 {
            // Everything left fits under the root directly.
            let all: Vec<usize> = (0..data.n_vars()).collect();
            let fit = fit_lcm_em(
                &data,
                &all,
                params,
                derive_seed(params.seed, &[TAG_ROOT_FIT, u64::from(level)]),
            )?;
            let root = latent_name(level, 0);
            for (m, &var) in fit.members.iter().enumerate() {
                edges.insert(
                    data.names[var].clone(),
                    (root.clone(), clamp_cpt(&fit.member_cpts[m])),
                );
            }
            log.root_vars = data.n_vars();
            log.root_log_likelihood = Some(fit.final_log_likelihood);
            root_spec = (root, level, fit.latent_p1);
            break;
        }

        let fit_island = |(k, island): (usize, &Vec<usize>)| {
            fit_lcm_em(
                &data,
                island,
                params,
                derive_seed(
                    params.seed,
                    &[TAG_ISLAND_FIT, u64::from(level), k as u64],
                ),
            )
        };
        let fits: Vec<LcmFit> = if params.strict_repro {
            islands
                .iter()
                .enumerate()
                .map(fit_island)
                .collect::<Result<_>>()?
        } else {
            islands
                .par_iter()
                .enumerate()
                .map(fit_island)
                .collect::<Result<_>>()?
        };

        for (k, fit) in fits.iter().enumerate() {
            let name = latent_name(level, k);
            for (m, &var) in fit.members.iter().enumerate() {
                edges.insert(
                    data.names[var].clone(),
                    (name.clone(), clamp_cpt(&fit.member_cpts[m])),
                );
            }
            latents.push(PendingLatent {
                name,
                level,
                marginal_p1: fit.latent_p1,
            });
        }
        log.levels.push(LevelLog {
            level,
            n_vars: data.n_vars(),
            islands: islands
                .iter()
                .map(|g| g.iter().map(|&v| data.names[v].clone()).collect())
                .collect(),
            log_likelihoods: fits.iter().map(|f| f.final_log_likelihood).collect(),
        });

        data = harden_level(&data, &fits);

        if data.n_vars() == 1 {
            // The only remaining latent becomes the root; its island fit
            // supplies the marginal.
            let name = data.names[0].clone();
            let p1 = latents
                .iter()
                .find(|l| l.name == name)
                .expect("latent was just created")
                .marginal_p1;
            log.root_vars = 1;
            root_spec = (name, level, p1);
            break;
        }
        if data.n_vars() <= params.top_level_max_vars {
            let level = data.level + 1;
            let all: Vec<usize> = (0..data.n_vars()).collect();
            let fit = fit_lcm_em(
                &data,
                &all,
                params,
                derive_seed(params.seed, &[TAG_ROOT_FIT, u64::from(level)]),
            )?;
            let root = latent_name(level, 0);
            for (m, &var) in fit.members.iter().enumerate() {
                edges.insert(
                    data.names[var].clone(),
                    (root.clone(), clamp_cpt(&fit.member_cpts[m])),
                );
            }
            log.root_vars = data.n_vars();
            log.root_log_likelihood = Some(fit.final_log_likelihood);
            root_spec = (root, level, fit.latent_p1);
            break;
        }
    }

    let (root_name, root_level, root_p1) = root_spec;
    let p1 = root_p1.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    let mut builder = ModelBuilder::new();
    for token in &matrix.tokens {
        let (parent, cpt) = edges
            .get(token)
            .expect("every word is in some level-1 island");
        builder = builder.word(token, parent, *cpt);
    }
    for latent in &latents {
        if latent.name == root_name {
            continue;
        }
        let (parent, cpt) = edges
            .get(&latent.name)
            .expect("every non-root latent was adopted by a higher level");
        builder = builder.latent(&latent.name, parent, latent.level, *cpt);
    }
    builder = builder.root(&root_name, root_level, [1.0 - p1, p1]);
    let model = builder.build()?;
    model.validate()?;
    Ok((model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn level_of(columns: Vec<Vec<bool>>) -> LevelData {
        // columns[var][doc] -> rows[doc][var]
        let n_docs = columns[0].len();
        let rows = (0..n_docs)
            .map(|d| columns.iter().map(|c| c[d]).collect())
            .collect();
        LevelData {
            names: (0..columns.len()).map(|v| format!("v{v}")).collect(),
            rows,
            level: 0,
        }
    }

    #[test]
    fn mi_of_identical_columns_is_near_entropy() {
        // MI of a column with itself is the column entropy; add-one
        // smoothing moves 2/(N+4) of mass off the diagonal, so the gap
        // shrinks with N. The smoothed value itself has a closed form.
        let n = 1000;
        let col: Vec<bool> = (0..n).map(|i| i % 5 < 2).collect(); // p = 0.4
        let data = level_of(vec![col.clone(), col]);
        let mi = empirical_pairwise_mi(&data);
        let p: f64 = 0.4;
        let entropy = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        assert!((mi[0][1] - entropy).abs() < 0.05, "mi {}", mi[0][1]);

        let denom = (n + 4) as f64;
        let ones = (n as f64) * p;
        let joint = [
            [(n as f64 - ones + 1.0) / denom, 1.0 / denom],
            [1.0 / denom, (ones + 1.0) / denom],
        ];
        let expected = mutual_information(&joint).unwrap();
        assert!((mi[0][1] - expected).abs() < 1e-12);
    }

    #[test]
    fn mi_of_independent_columns_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.5)).collect();
        let b: Vec<bool> = (0..10_000).map(|_| rng.gen_bool(0.5)).collect();
        let data = level_of(vec![a, b]);
        let mi = empirical_pairwise_mi(&data);
        assert!(mi[0][1] < 0.01, "mi {}", mi[0][1]);
    }

    #[test]
    fn mi_matrix_is_symmetric_with_zero_diagonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let cols: Vec<Vec<bool>> = (0..4)
            .map(|_| (0..50).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let data = level_of(cols);
        let mi = empirical_pairwise_mi(&data);
        for i in 0..4 {
            assert_eq!(mi[i][i], 0.0);
            for j in 0..4 {
                assert!((mi[i][j] - mi[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn islands_recover_two_planted_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 500;
        let z1: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let z2: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let noisy = |z: &[bool], rng: &mut ChaCha8Rng| -> Vec<bool> {
            z.iter()
                .map(|&v| if rng.gen_bool(0.05) { !v } else { v })
                .collect()
        };
        let cols = vec![
            noisy(&z1, &mut rng),
            noisy(&z1, &mut rng),
            noisy(&z2, &mut rng),
            noisy(&z2, &mut rng),
        ];
        let data = level_of(cols);
        let mi = empirical_pairwise_mi(&data);
        let mut got = build_islands(&mi, 7);
        got.sort();
        assert_eq!(got, vec![vec![0, 1], vec![2, 3]]);

        // Exhaustive oracle: the pairing with the highest within-group MI sum.
        let pairings = [
            (vec![0usize, 1], vec![2usize, 3]),
            (vec![0, 2], vec![1, 3]),
            (vec![0, 3], vec![1, 2]),
        ];
        let best = pairings
            .iter()
            .max_by(|a, b| {
                let score =
                    |p: &(Vec<usize>, Vec<usize>)| mi[p.0[0]][p.0[1]] + mi[p.1[0]][p.1[1]];
                score(a).partial_cmp(&score(b)).unwrap()
            })
            .unwrap();
        assert_eq!(got[0], best.0);
        assert_eq!(got[1], best.1);
    }

    #[test]
    fn two_variables_form_one_island() {
        let mi = vec![vec![0.0, 0.3], vec![0.3, 0.0]];
        assert_eq!(build_islands(&mi, 7), vec![vec![0, 1]]);
    }

    #[test]
    fn zero_mi_groups_by_index_order() {
        let n = 15;
        let mi = vec![vec![0.0; n]; n];
        let groups = build_islands(&mi, 7);
        // Two full islands; the leftover joins its (tie-broken) partner 0.
        assert_eq!(
            groups,
            vec![vec![0, 1, 2, 3, 4, 5, 6, 14], vec![7, 8, 9, 10, 11, 12, 13]]
        );
    }

    #[test]
    fn lcm_fit_on_degenerate_all_ones() {
        // With identical all-ones rows the occupied latent branch learns an
        // (smoothed) all-ones row and the fit explains every row almost
        // surely; the starved branch has no mass and sits at the smoothing
        // prior.
        let ones = vec![true; 200];
        let data = level_of(vec![ones.clone(), ones]);
        let fit = fit_lcm_em(&data, &[0, 1], &LearnParams::default(), 1).unwrap();
        for cpt in &fit.member_cpts {
            assert!(cpt[1][1] > 0.9, "P(x=1|Y=1) = {}", cpt[1][1]);
        }
        assert!(fit.final_log_likelihood / 200.0 > -0.05);
    }

    #[test]
    fn lcm_fit_recovers_correlated_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let z: Vec<bool> = (0..1000).map(|_| rng.gen_bool(0.5)).collect();
        let data = level_of(vec![z.clone(), z]);
        let fit = fit_lcm_em(&data, &[0, 1], &LearnParams::default(), 2).unwrap();
        for cpt in &fit.member_cpts {
            assert!(cpt[1][1] > 0.95, "P(x=1|Y=1) = {}", cpt[1][1]);
            assert!(cpt[0][1] < 0.05, "P(x=1|Y=0) = {}", cpt[0][1]);
        }
        // Label convention.
        assert!(fit.member_cpts[0][1][1] >= fit.member_cpts[0][0][1]);
    }

    #[test]
    fn em_objective_never_decreases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..10 {
            let cols: Vec<Vec<bool>> = (0..3)
                .map(|_| (0..120).map(|_| rng.gen_bool(0.4)).collect())
                .collect();
            let data = level_of(cols);
            let fit = fit_lcm_em(&data, &[0, 1, 2], &LearnParams::default(), trial).unwrap();
            for w in fit.objective_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "trace dipped: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn harden_copies_a_deterministic_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let col: Vec<bool> = (0..60).map(|_| rng.gen_bool(0.5)).collect();
        let other: Vec<bool> = (0..60).map(|_| rng.gen_bool(0.5)).collect();
        let data = level_of(vec![col.clone(), other]);
        let fit = LcmFit {
            members: vec![0, 1],
            latent_p1: 0.5,
            member_cpts: vec![
                [[0.999, 0.001], [0.001, 0.999]], // tracks member 0
                [[0.5, 0.5], [0.5, 0.5]],         // ignores member 1
            ],
            final_log_likelihood: 0.0,
            iterations: 0,
            objective_trace: vec![],
        };
        let next = harden_level(&data, &[fit]);
        assert_eq!(next.n_docs(), 60);
        assert_eq!(next.level, 1);
        assert_eq!(next.names, vec!["Z1.1"]);
        let hardened: Vec<bool> = next.rows.iter().map(|r| r[0]).collect();
        assert_eq!(hardened, col);
    }

    #[test]
    fn harden_sends_exact_half_posterior_to_one() {
        let data = level_of(vec![vec![true, false], vec![false, true]]);
        let fit = LcmFit {
            members: vec![0, 1],
            latent_p1: 0.5,
            member_cpts: vec![[[0.5, 0.5], [0.5, 0.5]]; 2],
            final_log_likelihood: 0.0,
            iterations: 0,
            objective_trace: vec![],
        };
        let next = harden_level(&data, &[fit]);
        assert!(next.rows.iter().all(|r| r[0]));
    }

    #[test]
    fn learn_recovers_planted_pair_structure() {
        let (matrix, truth) = synth::planted_pairs_matrix(99, 2000, 0.05);
        let params = LearnParams {
            seed: 99,
            ..Default::default()
        };
        let (model, log) = learn_hierarchy(&matrix, &params).unwrap();
        assert_eq!(log.levels.len(), 1);
        let mut got: Vec<Vec<String>> = log.levels[0]
            .islands
            .iter()
            .map(|g| {
                let mut g = g.clone();
                g.sort();
                g
            })
            .collect();
        got.sort();
        assert_eq!(got, truth);
        // Each level-1 latent parents its planted pair; the root parents the
        // two latents.
        assert_eq!(model.latent_ids().len(), 3);
        let root_kids = model.children_ids(model.root_id());
        assert_eq!(root_kids.len(), 2);
    }

    #[test]
    fn learn_two_words_yields_single_root() {
        let (matrix, _) = synth::planted_pairs_matrix(3, 100, 0.05);
        let trimmed = DocTermMatrix {
            doc_ids: matrix.doc_ids.clone(),
            tokens: matrix.tokens[..2].to_vec(),
            presence: matrix
                .presence
                .iter()
                .map(|p| p.iter().copied().filter(|&i| i < 2).collect())
                .collect(),
        };
        let (model, log) = learn_hierarchy(&trimmed, &LearnParams::default()).unwrap();
        assert_eq!(model.latent_ids().len(), 1);
        assert_eq!(model.word_names().len(), 2);
        assert!(log.levels.is_empty());
        assert_eq!(log.root_vars, 2);
    }

    #[test]
    fn learn_rejects_tiny_vocabularies() {
        let matrix = DocTermMatrix {
            doc_ids: vec!["d".into()],
            tokens: vec!["one".into()],
            presence: vec![vec![0]],
        };
        assert!(matches!(
            learn_hierarchy(&matrix, &LearnParams::default()),
            Err(Error::TooFewVariables { .. })
        ));
    }

    #[test]
    fn learn_is_deterministic_for_a_seed() {
        let (matrix, _) = synth::planted_pairs_matrix(21, 300, 0.05);
        let params = LearnParams {
            seed: 7,
            ..Default::default()
        };
        let (m1, _) = learn_hierarchy(&matrix, &params).unwrap();
        let (m2, _) = learn_hierarchy(&matrix, &params).unwrap();
        assert_eq!(m1.to_json_string(), m2.to_json_string());
        let strict = LearnParams {
            strict_repro: true,
            ..params
        };
        let (m3, _) = learn_hierarchy(&matrix, &strict).unwrap();
        assert_eq!(m1.to_json_string(), m3.to_json_string());
    }

    #[test]
    fn deep_hierarchies_emerge_from_many_words() {
        // 120 words in 40 correlated triples; level 1 yields ~40 islands,
        // which exceeds the top-level cap and forces a second latent level
        // below the root.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n_docs = 150;
        let mut cols: Vec<Vec<bool>> = Vec::new();
        for _ in 0..40 {
            let z: Vec<bool> = (0..n_docs).map(|_| rng.gen_bool(0.5)).collect();
            for _ in 0..3 {
                cols.push(
                    z.iter()
                        .map(|&v| if rng.gen_bool(0.05) { !v } else { v })
                        .collect(),
                );
            }
        }
        let names: Vec<String> = (0..cols.len()).map(|i| format!("w{i:03}")).collect();
        let presence: Vec<Vec<usize>> = (0..n_docs)
            .map(|d| (0..cols.len()).filter(|&v| cols[v][d]).collect())
            .collect();
        let matrix = DocTermMatrix {
            doc_ids: (0..n_docs).map(|d| format!("d{d}")).collect(),
            tokens: names,
            presence,
        };
        let params = LearnParams {
            em_restarts: 2,
            em_max_iters: 60,
            seed: 5,
            ..Default::default()
        };
        let (model, log) = learn_hierarchy(&matrix, &params).unwrap();
        assert!(log.levels.len() >= 2, "levels: {}", log.levels.len());
        let max_level = model.nodes().iter().map(|n| n.level).max().unwrap();
        assert!(max_level >= 3);
        model.validate().unwrap();
    }
}
