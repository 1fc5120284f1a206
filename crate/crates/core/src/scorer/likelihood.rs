//! Edge-factored likelihood: each child independently picks its parent by a
//! softmax over all parents it may legally have.

use ndarray::Array2;

use super::ScorerError;
use crate::decoder::ScoreMatrix;
use crate::mapping::{ParseTree, SupervisionMask};
use crate::scalar::Real;
use crate::symbol_table::NodeSet;

/// `log sum exp` over the finite scores of a child's column.
fn log_partition<T: Real>(scores: impl Iterator<Item = T> + Clone) -> Option<T> {
    let max = scores.clone().fold(None, |m: Option<T>, s| Some(m.map_or(s, |m| m.max(s))))?;
    let sum: T = scores.map(|s| (s - max).exp()).sum();
    Some(max + sum.ln())
}

/// `p(parent | child)` for every allowed parent of `child`, in node order.
pub fn parent_distribution<T: Real>(scores: &ScoreMatrix<T>, child: usize) -> Vec<(usize, T)> {
    let column = (0..scores.len()).filter_map(|p| scores.get(p, child).map(|s| (p, s)));
    let Some(z) = log_partition(column.clone().map(|(_, s)| s)) else {
        return Vec::new();
    };
    column.map(|(p, s)| (p, (s - z).exp())).collect()
}

/// Log-probability of the observed edges of `mask`, which must all belong to
/// `parse`.
pub fn log_likelihood<T: Real>(
    scores: &ScoreMatrix<T>,
    parse: &ParseTree,
    mask: &SupervisionMask,
) -> Result<T, ScorerError> {
    for (c, p) in mask.edges() {
        if parse.parent(c) != Some(p) {
            return Err(ScorerError::MaskMismatch { child: c, parent: p });
        }
    }
    masked_log_likelihood(scores, mask)
}

/// Log-probability of the observed edges of `mask`; unobserved children
/// contribute nothing.
pub fn masked_log_likelihood<T: Real>(scores: &ScoreMatrix<T>, mask: &SupervisionMask) -> Result<T, ScorerError> {
    let mut total = T::zero();
    for (c, p) in mask.edges() {
        let gold = scores
            .get(p, c)
            .ok_or(ScorerError::ForbiddenEdge { child: c, parent: p })?;
        let z = log_partition((0..scores.len()).filter_map(|q| scores.get(q, c)))
            .expect("column has the gold entry");
        total += gold - z;
    }
    Ok(total)
}

/// Whether `parent -> child` is structurally allowed.
#[inline]
pub(crate) fn allowed(ns: &NodeSet, parent: usize, child: usize) -> bool {
    parent != child && !ns.is_token(parent) && child != ns.root()
}

/// Negative masked log-likelihood of dense scores and its gradient.
pub(crate) fn loss_and_grad<T: Real>(
    s: &Array2<T>,
    ns: &NodeSet,
    mask: &SupervisionMask,
) -> Result<(T, Array2<T>), ScorerError> {
    let n = s.nrows();
    let mut ds = Array2::zeros((n, n));
    let mut loss = T::zero();
    for (c, gold) in mask.edges() {
        if !allowed(ns, gold, c) {
            return Err(ScorerError::ForbiddenEdge { child: c, parent: gold });
        }
        let parents = (0..n).filter(|&p| allowed(ns, p, c));
        let z = log_partition(parents.clone().map(|p| s[[p, c]])).expect("gold parent is allowed");
        loss += z - s[[gold, c]];
        for p in parents {
            ds[[p, c]] = (s[[p, c]] - z).exp();
        }
        ds[[gold, c]] -= T::one();
    }
    Ok((loss, ds))
}
