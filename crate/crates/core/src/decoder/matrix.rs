use serde::{Deserialize, Serialize};

use super::DecodeError;
use crate::scalar::Score;
use crate::symbol_table::NodeSet;

/// Dense `parent x child` edge scores. `None` marks a forbidden edge and is
/// never used in arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeScores<T> {
    n: usize,
    data: Vec<Option<T>>,
}

impl<T: Score> EdgeScores<T> {
    /// All edges forbidden.
    pub fn forbidden(n: usize) -> Self {
        EdgeScores {
            n,
            data: vec![None; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Option<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for p in 0..n {
            for c in 0..n {
                data.push(if p == c { None } else { f(p, c) });
            }
        }
        EdgeScores { n, data }
    }

    /// Row-major (`parent * n + child`) entries.
    pub fn from_row_major(n: usize, data: Vec<Option<T>>) -> Self {
        assert_eq!(data.len(), n * n, "score data must be n x n");
        let mut s = EdgeScores { n, data };
        for i in 0..n {
            s.forbid(i, i);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, parent: usize, child: usize) -> Option<T> {
        self.data[parent * self.n + child]
    }

    #[inline]
    pub fn set(&mut self, parent: usize, child: usize, score: Option<T>) {
        self.data[parent * self.n + child] = score;
    }

    #[inline]
    pub fn forbid(&mut self, parent: usize, child: usize) {
        self.set(parent, child, None);
    }

    pub fn row_major(&self) -> &[Option<T>] {
        &self.data
    }

    /// Sum of the scores of the given `child -> parent` edges; `None` if any
    /// edge is forbidden.
    pub fn total(&self, edges: impl IntoIterator<Item = (usize, usize)>) -> Option<T> {
        edges
            .into_iter()
            .map(|(c, p)| self.get(p, c))
            .sum::<Option<T>>()
    }

    /// Highest-scoring allowed parent of `child`, lowest index on ties.
    pub fn best_parent(&self, child: usize, allowed: impl Fn(usize) -> bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for p in 0..self.n {
            if !allowed(p) {
                continue;
            }
            if let Some(s) = self.get(p, child) {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((p, s));
                }
            }
        }
        best.map(|(p, _)| p)
    }
}

/// Edge scores over a node set, with token parents, `Root` as child and
/// self-edges always forbidden.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix<T> {
    node_set: NodeSet,
    edges: EdgeScores<T>,
}

impl<T: Score> ScoreMatrix<T> {
    /// Wraps raw edge scores, forcing the structural prohibitions and
    /// rejecting NaN or infinite entries.
    pub fn new(node_set: NodeSet, mut edges: EdgeScores<T>) -> Result<Self, DecodeError> {
        let n = node_set.len();
        if edges.len() != n {
            return Err(DecodeError::Shape {
                expected: n,
                found: edges.len(),
            });
        }
        for p in 0..n {
            for c in 0..n {
                if node_set.is_token(p) || c == node_set.root() || p == c {
                    edges.forbid(p, c);
                } else if let Some(s) = edges.get(p, c) {
                    if !s.is_finite_score() {
                        return Err(DecodeError::NonFiniteScore { parent: p, child: c });
                    }
                }
            }
        }
        Ok(ScoreMatrix { node_set, edges })
    }

    pub fn from_fn(
        node_set: NodeSet,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self, DecodeError> {
        let n = node_set.len();
        Self::new(node_set, EdgeScores::from_fn(n, |p, c| Some(f(p, c))))
    }

    pub fn node_set(&self) -> &NodeSet {
        &self.node_set
    }

    pub fn edges(&self) -> &EdgeScores<T> {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    #[inline]
    pub fn get(&self, parent: usize, child: usize) -> Option<T> {
        self.edges.get(parent, child)
    }

    /// Converts every finite entry, keeping forbidden ones forbidden.
    pub fn map<U: Score>(&self, f: impl Fn(T) -> U) -> ScoreMatrix<U> {
        let data = self.edges.data.iter().map(|s| s.map(&f)).collect();
        ScoreMatrix {
            node_set: self.node_set.clone(),
            edges: EdgeScores {
                n: self.edges.n,
                data,
            },
        }
    }
}

/// JSON interchange form of a score matrix. `scores` is row-major
/// (`parent * n + child`) with `null` for forbidden edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFile {
    pub tokens: Vec<String>,
    pub vocab_hash: String,
    pub nodes: Vec<String>,
    pub scores: Vec<Option<f64>>,
}

impl ScoreFile {
    pub fn from_matrix<T: Score>(m: &ScoreMatrix<T>, tokens: &[impl AsRef<str>], vocab_hash: &str) -> Self {
        ScoreFile {
            tokens: tokens.iter().map(|t| t.as_ref().to_string()).collect(),
            vocab_hash: vocab_hash.to_string(),
            nodes: m.node_set().names(),
            scores: m.edges().row_major().iter().map(|s| s.map(Score::to_f64)).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ScoreMatrix<f64>, DecodeError> {
        let ns = NodeSet::from_names(&self.nodes)?;
        let n = ns.len();
        if self.scores.len() != n * n {
            return Err(DecodeError::Shape {
                expected: n * n,
                found: self.scores.len(),
            });
        }
        if self.tokens.len() != ns.token_count() {
            return Err(DecodeError::Shape {
                expected: ns.token_count(),
                found: self.tokens.len(),
            });
        }
        ScoreMatrix::new(ns, EdgeScores::from_row_major(n, self.scores.clone()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("score file serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DecodeError> {
        serde_json::from_str(text).map_err(|e| DecodeError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::top_ir::SymbolLabel;

    fn small_set() -> NodeSet {
        NodeSet::new(2, vec![SymbolLabel::new("IN:A").unwrap()], vec![2])
    }

    #[test]
    fn structural_prohibitions_are_forced() {
        let m = ScoreMatrix::from_fn(small_set(), |_, _| 1i64).unwrap();
        let ns = m.node_set().clone();
        for c in 0..ns.len() {
            for t in 0..ns.token_count() {
                assert_eq!(m.get(t, c), None);
            }
            assert_eq!(m.get(c, ns.root()), None);
            assert_eq!(m.get(c, c), None);
        }
        assert_eq!(m.get(ns.root(), 2), Some(1));
    }

    #[test]
    fn non_finite_rejected() {
        let ns = small_set();
        let err = ScoreMatrix::from_fn(ns, |p, c| if p == 2 && c == 3 { f64::NAN } else { 0.0 });
        assert!(matches!(err, Err(DecodeError::NonFiniteScore { parent: 2, child: 3 })));
    }

    #[test]
    fn best_parent_ties_go_to_lowest_index() {
        let e = EdgeScores::from_fn(4, |_, _| Some(3i64));
        assert_eq!(e.best_parent(2, |_| true), Some(0));
        assert_eq!(e.best_parent(0, |p| p != 1), Some(2));
        assert_eq!(EdgeScores::<i64>::forbidden(3).best_parent(0, |_| true), None);
    }

    #[test]
    fn json_round_trip_with_nulls() {
        let m = ScoreMatrix::from_fn(small_set(), |p, c| (p * 10 + c) as f64 * 0.5).unwrap();
        let file = ScoreFile::from_matrix(&m, &["a", "b"], "abc");
        let json = file.to_json();
        assert!(json.contains("null"));
        let back = ScoreFile::from_json(&json).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_matrix().unwrap(), m);
    }

    #[test]
    fn json_shape_errors() {
        let m = ScoreMatrix::from_fn(small_set(), |_, _| 0.0).unwrap();
        let mut file = ScoreFile::from_matrix(&m, &["a", "b"], "");
        file.scores.pop();
        assert!(matches!(file.to_matrix(), Err(DecodeError::Shape { .. })));
        let mut file = ScoreFile::from_matrix(&m, &["a"], "");
        file.scores.clear();
        assert!(file.to_matrix().is_err());
        assert!(ScoreFile::from_json("{").is_err());
    }
}
