//! Repairs greedy parents so that the `Unused` subtree has no grandchildren.

use super::matrix::EdgeScores;
use super::{ChildOrder, DecodeError};
use crate::scalar::Score;

/// Outcome of the `Unused` preprocessing step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnusedFixed {
    /// Direct children of `Unused` once repaired, ascending.
    pub children: Vec<usize>,
    /// Number of repair actions taken.
    pub repairs: usize,
}

/// Greedy parent of every node except `root`, lowest index on ties.
pub fn best_parents<T: Score>(edges: &EdgeScores<T>, root: usize) -> Vec<Option<usize>> {
    (0..edges.len())
        .map(|c| {
            if c == root {
                None
            } else {
                edges.best_parent(c, |_| true)
            }
        })
        .collect()
}

/// Enforces depth two below `unused` by deleting edges from `edges`.
///
/// Each child `a` of `unused` that itself has children is resolved by the
/// cheaper of two actions: re-parent `a` to its next-best parent (cost: the
/// score drop on `a`'s edge), or re-parent every child of `a` to its
/// next-best parent (cost: the summed drops). Ties re-parent `a`. Deleted
/// edges stay deleted, and the scan restarts until no violation remains, so
/// repairs that create new violations are handled too.
pub fn preprocess_unused<T: Score>(
    edges: &mut EdgeScores<T>,
    best: &mut [Option<usize>],
    unused: usize,
    order: ChildOrder,
) -> Result<UnusedFixed, DecodeError> {
    let n = edges.len();
    let mut repairs = 0;
    loop {
        let has_children = |a: usize, best: &[Option<usize>]| best.contains(&Some(a));
        let mut candidates: Vec<usize> = (0..n)
            .filter(|&a| best[a] == Some(unused) && has_children(a, best))
            .collect();
        if order == ChildOrder::Descending {
            candidates.reverse();
        }
        let Some(&a) = candidates.first() else {
            break;
        };
        let kids: Vec<usize> = (0..n).filter(|&c| best[c] == Some(a)).collect();

        let move_parent = {
            let current = edges.get(unused, a).expect("edge in use");
            edges
                .best_parent(a, |p| p != unused)
                .map(|p| (p, current - edges.get(p, a).unwrap()))
        };
        let move_kids: Option<(Vec<(usize, usize)>, T)> = kids
            .iter()
            .map(|&c| {
                let current = edges.get(a, c).expect("edge in use");
                edges
                    .best_parent(c, |p| p != a)
                    .map(|p| ((c, p), current - edges.get(p, c).unwrap()))
            })
            .collect::<Option<Vec<_>>>()
            .map(|moves| {
                let cost = moves.iter().map(|&(_, d)| d).sum::<T>();
                (moves.into_iter().map(|(m, _)| m).collect(), cost)
            });

        match (move_parent, move_kids) {
            (None, None) => return Err(DecodeError::InfeasibleGraph(a)),
            (Some((p, cost_a)), Some((_, cost_kids))) if cost_a <= cost_kids => {
                edges.forbid(unused, a);
                best[a] = Some(p);
            }
            (Some((p, _)), None) => {
                edges.forbid(unused, a);
                best[a] = Some(p);
            }
            (_, Some((moves, _))) => {
                for (c, p) in moves {
                    edges.forbid(a, c);
                    best[c] = Some(p);
                }
            }
        }
        repairs += 1;
    }
    let children = (0..n).filter(|&a| best[a] == Some(unused)).collect();
    Ok(UnusedFixed { children, repairs })
}
