//! Constrained maximum spanning arborescence decoding.
//!
//! The pipeline runs in three stages on a working copy of the scores:
//!
//! 1. greedy best parents for every node;
//! 2. [`preprocess_unused`] repairs the `Unused` subtree to depth two and
//!    freezes it;
//! 3. [`resolve_root`] runs [`cle`] once per root-child candidate (the nodes
//!    whose best parent is `Root`) over the remaining nodes and keeps the
//!    best tree.
//!
//! Both repairs are approximations: the result is always a valid parse, but
//! not necessarily the best valid parse. [`oracle_decode`] finds the exact
//! optimum by search on small instances.

mod cle;
mod matrix;
mod oracle;
mod unused;

use thiserror::Error;

pub use cle::cle;
pub use matrix::{EdgeScores, ScoreFile, ScoreMatrix};
pub use oracle::{oracle_decode, DEFAULT_ORACLE_BOUND};
pub use unused::{best_parents, preprocess_unused, UnusedFixed};

use crate::mapping::{MappingError, ParseTree};
use crate::scalar::Score;
use crate::symbol_table::{NodeSet, VocabError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("node {0} has no admissible parent")]
    InfeasibleGraph(usize),
    #[error("no admissible root child")]
    NoRootCandidate,
    #[error("instance has {nodes} non-root nodes, above the oracle bound {bound}")]
    TooLarge { nodes: usize, bound: usize },
    #[error("non-finite score on edge {parent} -> {child}")]
    NonFiniteScore { parent: usize, child: usize },
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("malformed score file: {0}")]
    Format(String),
    #[error(transparent)]
    Nodes(#[from] VocabError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// Order in which children of `Unused` are examined during repair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChildOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeOptions {
    pub unused_order: ChildOrder,
    /// Also try every symbol replica as root child, not only the nodes whose
    /// best parent is `Root`.
    pub widen_root_candidates: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Diagnostics {
    pub unused_depth_repairs: usize,
    /// Nodes whose greedy parent was `Root` after repair.
    pub root_candidates: usize,
    /// Set when no greedy candidate gave a tree and the fallback search ran.
    pub root_fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult<T> {
    pub parse: ParseTree,
    /// Sum of the scores of every edge in `parse`.
    pub total_score: T,
    pub diagnostics: Diagnostics,
}

/// Decodes with default options.
pub fn decode<T: Score>(scores: &ScoreMatrix<T>) -> Result<DecodeResult<T>, DecodeError> {
    decode_with(scores, &DecodeOptions::default())
}

pub fn decode_with<T: Score>(
    scores: &ScoreMatrix<T>,
    options: &DecodeOptions,
) -> Result<DecodeResult<T>, DecodeError> {
    let ns = scores.node_set();
    let (root, unused) = (ns.root(), ns.unused());
    let mut edges = scores.edges().clone();
    // Unused may only hang from Root.
    for p in 0..edges.len() {
        if p != root {
            edges.forbid(p, unused);
        }
    }
    if edges.get(root, unused).is_none() {
        return Err(DecodeError::InfeasibleGraph(unused));
    }
    let mut best = best_parents(&edges, root);
    if let Some(c) = (0..edges.len()).find(|&c| c != root && best[c].is_none()) {
        return Err(DecodeError::InfeasibleGraph(c));
    }
    let fixed = preprocess_unused(&mut edges, &mut best, unused, options.unused_order)?;
    resolve_root(scores, &edges, &best, &fixed, options)
}

/// Chooses the single child of `Root` and decodes the rest with [`cle`].
///
/// `edges` is the working copy after [`preprocess_unused`]; the frozen
/// `Unused` subtree is excluded from the search. Candidate runs are compared
/// by total score including the `Root` edge; ties keep the lower index.
///
/// If no candidate gives a tree (none exist, or the repairs strand the
/// remaining nodes), the search is rerun on the original scores with only
/// token children kept under `Unused` and every symbol replica tried as root
/// child. This is flagged in the diagnostics.
pub fn resolve_root<T: Score>(
    scores: &ScoreMatrix<T>,
    edges: &EdgeScores<T>,
    best: &[Option<usize>],
    fixed: &UnusedFixed,
    options: &DecodeOptions,
) -> Result<DecodeResult<T>, DecodeError> {
    let ns = scores.node_set();
    let root = ns.root();
    let remaining = remaining_nodes(ns, &fixed.children);

    let greedy: Vec<usize> = remaining
        .iter()
        .copied()
        .filter(|&v| best[v] == Some(root))
        .collect();
    let mut diagnostics = Diagnostics {
        unused_depth_repairs: fixed.repairs,
        root_candidates: greedy.len(),
        root_fallback: false,
    };
    let mut candidates = greedy;
    if options.widen_root_candidates {
        candidates.extend(symbol_candidates(ns, edges, &remaining));
        candidates.sort_unstable();
        candidates.dedup();
    }

    let found = match search(scores, edges, &fixed.children, &candidates) {
        Ok(t) => t,
        Err(_) => {
            diagnostics.root_fallback = true;
            let kept: Vec<usize> = fixed
                .children
                .iter()
                .copied()
                .filter(|&a| ns.is_token(a))
                .collect();
            // Edges deleted by the repairs are restored here.
            let released = scores.edges();
            let remaining = remaining_nodes(ns, &kept);
            let candidates = symbol_candidates(ns, released, &remaining);
            search(scores, released, &kept, &candidates)?
        }
    };
    let (total_score, parents) = found;
    let parse = ParseTree::new(ns.clone(), parents)?;
    Ok(DecodeResult {
        parse,
        total_score,
        diagnostics,
    })
}

fn remaining_nodes(ns: &NodeSet, unused_children: &[usize]) -> Vec<usize> {
    (0..ns.len())
        .filter(|&v| v != ns.root() && v != ns.unused() && !unused_children.contains(&v))
        .collect()
}

fn symbol_candidates<T: Score>(ns: &NodeSet, edges: &EdgeScores<T>, remaining: &[usize]) -> Vec<usize> {
    remaining
        .iter()
        .copied()
        .filter(|&v| ns.is_symbol(v) && edges.get(ns.root(), v).is_some())
        .collect()
}

/// Best tree over the candidate root children, with `unused_children` fixed
/// under `Unused`. Returns the total score and the parent map.
fn search<T: Score>(
    scores: &ScoreMatrix<T>,
    edges: &EdgeScores<T>,
    unused_children: &[usize],
    candidates: &[usize],
) -> Result<(T, Vec<Option<usize>>), DecodeError> {
    let ns = scores.node_set();
    let n = ns.len();
    let (root, unused) = (ns.root(), ns.unused());
    let mut active = vec![false; n];
    for v in remaining_nodes(ns, unused_children) {
        active[v] = true;
    }
    let mut best: Option<(T, Vec<Option<usize>>)> = None;
    let mut last_err = DecodeError::NoRootCandidate;
    for &cand in candidates {
        let mut parents = match cle(edges, cand, &active) {
            Ok(p) => p,
            Err(e) => {
                last_err = e;
                continue;
            }
        };
        parents[cand] = Some(root);
        parents[unused] = Some(root);
        for &a in unused_children {
            parents[a] = Some(unused);
        }
        let total = scores.edges().total(
            parents
                .iter()
                .enumerate()
                .filter_map(|(c, p)| p.map(|p| (c, p))),
        );
        let Some(total) = total else { continue };
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, parents));
        }
    }
    best.ok_or(last_err)
}
