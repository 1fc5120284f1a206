//! Exact decoding by branch-and-bound search, for auditing the fast decoder.

use super::matrix::ScoreMatrix;
use super::DecodeError;
use crate::mapping::ParseTree;
use crate::scalar::Score;

/// Largest number of non-root nodes the oracle accepts by default.
pub const DEFAULT_ORACLE_BOUND: usize = 10;

struct Search<'a, T> {
    m: &'a ScoreMatrix<T>,
    order: Vec<usize>,
    /// Allowed parents of each node, best score first.
    options: Vec<Vec<(usize, T)>>,
    /// `rest[i]`: sum of the best incoming scores of `order[i..]`.
    rest: Vec<T>,
    parent: Vec<Option<usize>>,
    kids: Vec<usize>,
    root_children: usize,
    best: Option<(T, Vec<Option<usize>>)>,
}

/// Highest-scoring valid parse, found by exhaustive search with an
/// optimistic bound. Fails with [`DecodeError::TooLarge`] above `bound`
/// non-root nodes.
pub fn oracle_decode<T: Score>(
    m: &ScoreMatrix<T>,
    bound: usize,
) -> Result<(ParseTree, T), DecodeError> {
    let ns = m.node_set();
    let n = ns.len();
    let (root, unused) = (ns.root(), ns.unused());
    if n - 1 > bound {
        return Err(DecodeError::TooLarge {
            nodes: n - 1,
            bound,
        });
    }
    let Some(unused_score) = m.get(root, unused) else {
        return Err(DecodeError::InfeasibleGraph(unused));
    };
    let order: Vec<usize> = (0..n).filter(|&v| v != root && v != unused).collect();
    let mut options = Vec::with_capacity(order.len());
    for &c in &order {
        let mut opts: Vec<(usize, T)> = (0..n)
            .filter(|&p| p != unused || c != unused)
            .filter_map(|p| m.get(p, c).map(|s| (p, s)))
            .collect();
        if opts.is_empty() {
            return Err(DecodeError::InfeasibleGraph(c));
        }
        opts.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores"));
        options.push(opts);
    }
    let mut rest = vec![T::zero(); order.len() + 1];
    for i in (0..order.len()).rev() {
        rest[i] = rest[i + 1] + options[i][0].1;
    }
    let mut parent = vec![None; n];
    parent[unused] = Some(root);
    let mut kids = vec![0; n];
    kids[root] = 1;
    let mut s = Search {
        m,
        order,
        options,
        rest,
        parent,
        kids,
        root_children: 0,
        best: None,
    };
    s.go(0, unused_score);
    let (total, parents) = s.best.ok_or(DecodeError::NoRootCandidate)?;
    Ok((ParseTree::new(ns.clone(), parents)?, total))
}

impl<T: Score> Search<'_, T> {
    fn go(&mut self, i: usize, sum: T) {
        if let Some((b, _)) = &self.best {
            if sum + self.rest[i] <= *b {
                return;
            }
        }
        if i == self.order.len() {
            if self.root_children == 1 {
                self.best = Some((sum, self.parent.clone()));
            }
            return;
        }
        let c = self.order[i];
        let ns = self.m.node_set();
        let (root, unused) = (ns.root(), ns.unused());
        for k in 0..self.options[i].len() {
            let (p, s) = self.options[i][k];
            if p == root && self.root_children == 1 {
                continue;
            }
            // Children of Unused are leaves.
            if p == unused && self.kids[c] > 0 {
                continue;
            }
            if self.parent[p] == Some(unused) {
                continue;
            }
            if self.closes_cycle(c, p) {
                continue;
            }
            self.parent[c] = Some(p);
            self.kids[p] += 1;
            if p == root {
                self.root_children += 1;
            }
            self.go(i + 1, sum + s);
            if p == root {
                self.root_children -= 1;
            }
            self.kids[p] -= 1;
            self.parent[c] = None;
        }
    }

    fn closes_cycle(&self, c: usize, p: usize) -> bool {
        let mut v = p;
        loop {
            if v == c {
                return true;
            }
            match self.parent[v] {
                Some(u) => v = u,
                None => return false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::decode;
    use crate::mapping::check_parse;
    use crate::symbol_table::NodeSet;
    use crate::top_ir::SymbolLabel;

    fn set(tokens: usize, replicas: usize) -> NodeSet {
        NodeSet::new(tokens, vec![SymbolLabel::new("IN:A").unwrap()], vec![replicas])
    }

    #[test]
    fn agrees_with_decoder_on_easy_instance() {
        let ns = set(2, 2);
        let m = ScoreMatrix::from_fn(ns, |p, c| ((p * 5 + c * 3) % 7) as i64).unwrap();
        let (tree, total) = oracle_decode(&m, DEFAULT_ORACLE_BOUND).unwrap();
        check_parse(m.node_set(), tree.parents()).unwrap();
        let fast = decode(&m).unwrap();
        assert!(fast.total_score <= total);
    }

    #[test]
    fn too_large_is_refused() {
        let m = ScoreMatrix::from_fn(set(8, 3), |_, _| 0i64).unwrap();
        assert_eq!(
            oracle_decode(&m, 10),
            Err(DecodeError::TooLarge { nodes: 12, bound: 10 })
        );
    }

    #[test]
    fn beats_decoder_when_root_child_is_not_greedy() {
        // Nodes: tok:0, A#1, A#2, A#3, ROOT, UNUSED. Only A#3 prefers ROOT, but
        // the best tree hangs everything from A#1.
        let ns = set(1, 3);
        let (root, unused) = (ns.root(), ns.unused());
        let m = ScoreMatrix::from_fn(ns, |p, c| match (p, c) {
            (p, c) if p == root && c == unused => 0,
            (p, 2) if p == root => 1,
            (p, 1) if p == root => 0,
            (2, 1) => 1,
            (1, 2) => 10,
            (1, 0) => 10,
            (p, 3) if p == root => 5,
            (1, 3) => 4,
            _ => -20,
        })
        .unwrap();
        let (_, exact) = oracle_decode(&m, DEFAULT_ORACLE_BOUND).unwrap();
        let fast = decode(&m).unwrap();
        assert_eq!(exact, 24);
        assert_eq!(fast.diagnostics.root_candidates, 1);
        assert!(fast.total_score < exact);
    }
}
