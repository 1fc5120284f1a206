//! The bijection between TOP trees and dependency parses over a [`NodeSet`],
//! and extraction of observed edges for partial supervision.

use thiserror::Error;

use crate::symbol_table::{NodeSet, Vocabulary};
use crate::top_ir::{Fragment, PartialTree, SymbolTree, TopError, TopNode, TopTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("symbol {symbol} occurs more than its replica budget of {budget}")]
    ReplicaBudgetExceeded { symbol: String, budget: usize },
    #[error("symbol {0} is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("tree has {found} tokens but the node set has {expected}")]
    TokenCount { expected: usize, found: usize },
    #[error("invalid parse: {0}")]
    InvalidParse(String),
    #[error("retained subtree at {0} has no tokens, so its position is undefined")]
    UnanchoredSubtree(String),
    #[error("token {0} is not under the retained tree")]
    DroppedToken(usize),
    #[error(transparent)]
    Tree(#[from] TopError),
    #[error("vocabulary hash mismatch: file has {found}, expected {expected}")]
    VocabMismatch { expected: String, found: String },
    #[error("parse file line {line}: {message}")]
    Format { line: usize, message: String },
}

/// A dependency tree over a node set: one parent per node except `Root`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    node_set: NodeSet,
    parent: Vec<Option<usize>>,
}

impl ParseTree {
    /// Validates every structural invariant and builds the parse.
    pub fn new(node_set: NodeSet, parent: Vec<Option<usize>>) -> Result<Self, MappingError> {
        check_parse(&node_set, &parent)?;
        Ok(ParseTree { node_set, parent })
    }

    pub fn node_set(&self) -> &NodeSet {
        &self.node_set
    }

    pub fn parent(&self, child: usize) -> Option<usize> {
        self.parent[child]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    /// `(child, parent)` pairs in child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    pub fn children(&self, node: usize) -> Vec<usize> {
        self.edges()
            .filter(|&(_, p)| p == node)
            .map(|(c, _)| c)
            .collect()
    }

    /// The unique child of `Root` other than `Unused`.
    pub fn root_child(&self) -> usize {
        let unused = self.node_set.unused();
        self.children(self.node_set.root())
            .into_iter()
            .find(|&c| c != unused)
            .expect("validated parse has a root child")
    }
}

/// Checks the parse invariants: spanning arborescence rooted at `Root`, one
/// non-`Unused` root child, `Unused` under `Root` with no grandchildren, no
/// token parents.
pub fn check_parse(ns: &NodeSet, parent: &[Option<usize>]) -> Result<(), MappingError> {
    let invalid = |m: String| Err(MappingError::InvalidParse(m));
    let n = ns.len();
    if parent.len() != n {
        return invalid(format!("{} parents for {} nodes", parent.len(), n));
    }
    let (root, unused) = (ns.root(), ns.unused());
    if parent[root].is_some() {
        return invalid("ROOT has a parent".into());
    }
    for (c, p) in parent.iter().enumerate() {
        if c == root {
            continue;
        }
        let Some(p) = *p else {
            return invalid(format!("{} has no parent", ns.name(c)));
        };
        if p >= n || p == c {
            return invalid(format!("{} has parent {}", ns.name(c), p));
        }
        if ns.is_token(p) {
            return invalid(format!("token {} is a parent", ns.name(p)));
        }
        if p == unused && parent.iter().any(|&q| q == Some(c)) {
            return invalid(format!("UNUSED child {} has children", ns.name(c)));
        }
    }
    if parent[unused] != Some(root) {
        return invalid("UNUSED is not a child of ROOT".into());
    }
    let root_children = parent
        .iter()
        .enumerate()
        .filter(|&(c, &p)| p == Some(root) && c != unused)
        .count();
    if root_children != 1 {
        return invalid(format!("ROOT has {root_children} non-UNUSED children"));
    }
    // Every node must reach ROOT within n steps.
    let mut reaches = vec![false; n];
    reaches[root] = true;
    for start in 0..n {
        let mut path = Vec::new();
        let mut v = start;
        while !reaches[v] {
            if path.len() > n {
                return invalid(format!("cycle through {}", ns.name(start)));
            }
            path.push(v);
            v = parent[v].expect("checked above");
        }
        for v in path {
            reaches[v] = true;
        }
    }
    Ok(())
}

/// Walks a symbol tree in pre-order, assigning replica indices in visit order
/// and recording parent edges for symbols and any token leaves.
fn assign_preorder(
    root: &TopNode,
    ns: &NodeSet,
    parent: &mut [Option<usize>],
) -> Result<(), MappingError> {
    let mut counts = vec![0usize; ns.labels().len()];
    let mut stack: Vec<(&TopNode, usize)> = vec![(root, ns.root())];
    while let Some((node, up)) = stack.pop() {
        match node {
            TopNode::Token(t) => {
                let i = ns.token_index(t.position).ok_or(MappingError::TokenCount {
                    expected: ns.token_count(),
                    found: t.position + 1,
                })?;
                parent[i] = Some(up);
            }
            TopNode::Symbol { label, children } => {
                let id = ns
                    .symbol_id(label)
                    .ok_or_else(|| MappingError::UnknownSymbol(label.name().to_string()))?;
                counts[id] += 1;
                let me =
                    ns.replica(id, counts[id])
                        .ok_or_else(|| MappingError::ReplicaBudgetExceeded {
                            symbol: label.name().to_string(),
                            budget: ns.replicas(id).len(),
                        })?;
                parent[me] = Some(up);
                // Reverse push keeps pre-order on pop.
                for child in children.iter().rev() {
                    stack.push((child, me));
                }
            }
        }
    }
    Ok(())
}

/// Sends every symbol replica without a parent to `Unused`, and `Unused` to `Root`.
fn fill_unused(ns: &NodeSet, parent: &mut [Option<usize>]) {
    for i in (0..ns.len()).filter(|&i| ns.is_symbol(i)) {
        if parent[i].is_none() {
            parent[i] = Some(ns.unused());
        }
    }
    parent[ns.unused()] = Some(ns.root());
}

/// Maps a TOP tree to its parse: repeated symbols take replica indices in
/// pre-order, unused replicas hang from `Unused`.
pub fn top_to_parse(tree: &TopTree, node_set: &NodeSet) -> Result<ParseTree, MappingError> {
    if tree.token_count() != node_set.token_count() {
        return Err(MappingError::TokenCount {
            expected: node_set.token_count(),
            found: tree.token_count(),
        });
    }
    let mut parent = vec![None; node_set.len()];
    assign_preorder(tree.root(), node_set, &mut parent)?;
    fill_unused(node_set, &mut parent);
    ParseTree::new(node_set.clone(), parent)
}

/// Maps a parse back to a TOP tree: the `Unused` subtree is dropped, replica
/// indices are erased and children are ordered by their leftmost token.
pub fn parse_to_top(parse: &ParseTree, tokens: &[impl AsRef<str>]) -> Result<TopTree, MappingError> {
    let ns = parse.node_set();
    if tokens.len() != ns.token_count() {
        return Err(MappingError::TokenCount {
            expected: ns.token_count(),
            found: tokens.len(),
        });
    }
    let n = ns.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, p) in parse.edges() {
        children[p].push(c);
    }
    for (pos, &p) in parse.parents()[..ns.token_count()].iter().enumerate() {
        if p == Some(ns.unused()) {
            return Err(MappingError::DroppedToken(pos));
        }
    }
    let top = parse.root_child();
    if ns.is_token(top) {
        return Err(TopError::EmptyTree.into());
    }

    // Leftmost token in each retained subtree, post-order.
    let mut first = vec![None::<usize>; n];
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![top];
    while let Some(v) = stack.pop() {
        order.push(v);
        stack.extend(&children[v]);
    }
    for &v in order.iter().rev() {
        first[v] = if ns.is_token(v) {
            Some(v)
        } else {
            children[v].iter().filter_map(|&c| first[c]).min()
        };
        if first[v].is_none() {
            return Err(MappingError::UnanchoredSubtree(ns.name(v)));
        }
    }

    fn build(v: usize, ns: &NodeSet, children: &mut [Vec<usize>], first: &[Option<usize>], tokens: &[&str]) -> TopNode {
        if ns.is_token(v) {
            return TopNode::token(v, tokens[v]);
        }
        let mut kids = std::mem::take(&mut children[v]);
        kids.sort_by_key(|&c| first[c]);
        let label = ns.label_of(v).expect("symbol node").clone();
        let kids = kids
            .into_iter()
            .map(|c| build(c, ns, children, first, tokens))
            .collect();
        TopNode::symbol(label, kids)
    }
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let root = build(top, ns, &mut children, &first, &tokens);
    Ok(TopTree::new(root)?)
}

/// Observed `child -> parent` edges of a (partially) annotated example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisionMask {
    observed: Vec<Option<usize>>,
}

impl SupervisionMask {
    pub fn empty(len: usize) -> Self {
        SupervisionMask {
            observed: vec![None; len],
        }
    }

    /// Every edge of a complete parse.
    pub fn full(parse: &ParseTree) -> Self {
        SupervisionMask {
            observed: parse.parents().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn parent_of(&self, child: usize) -> Option<usize> {
        self.observed[child]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|p| p.is_some()).count()
    }

    /// `(child, parent)` pairs in child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    /// Splits into edges whose child is a token and all remaining edges.
    pub fn split_by_child(&self, ns: &NodeSet) -> (Self, Self) {
        let mut tokens = Self::empty(self.len());
        let mut rest = Self::empty(self.len());
        for (c, p) in self.edges() {
            if ns.is_token(c) {
                tokens.observed[c] = Some(p);
            } else {
                rest.observed[c] = Some(p);
            }
        }
        (tokens, rest)
    }
}

/// Edges observed under a supervision regime.
///
/// Terminal-only fragments are indexed per symbol in order of first token
/// position; nonterminal-only trees use pre-order indexing and also fix the
/// `Unused` attachments, which follow from the known symbol multiset.
pub fn extract_mask(partial: &PartialTree, node_set: &NodeSet) -> Result<SupervisionMask, MappingError> {
    match partial {
        PartialTree::Full(tree) => Ok(SupervisionMask::full(&top_to_parse(tree, node_set)?)),
        PartialTree::TerminalOnly(frags) => terminal_mask(frags, node_set),
        PartialTree::NonterminalOnly(tree) => nonterminal_mask(tree, node_set),
    }
}

fn terminal_mask(frags: &[Fragment], ns: &NodeSet) -> Result<SupervisionMask, MappingError> {
    let mut mask = SupervisionMask::empty(ns.len());
    let mut order: Vec<&Fragment> = frags.iter().collect();
    order.sort_by_key(|f| f.tokens.first().map(|t| t.position));
    let mut counts = vec![0usize; ns.labels().len()];
    for frag in order {
        let id = ns
            .symbol_id(&frag.label)
            .ok_or_else(|| MappingError::UnknownSymbol(frag.label.name().to_string()))?;
        counts[id] += 1;
        let replica = ns
            .replica(id, counts[id])
            .ok_or_else(|| MappingError::ReplicaBudgetExceeded {
                symbol: frag.label.name().to_string(),
                budget: ns.replicas(id).len(),
            })?;
        for t in &frag.tokens {
            let i = ns.token_index(t.position).ok_or(MappingError::TokenCount {
                expected: ns.token_count(),
                found: t.position + 1,
            })?;
            mask.observed[i] = Some(replica);
        }
    }
    Ok(mask)
}

fn nonterminal_mask(tree: &SymbolTree, ns: &NodeSet) -> Result<SupervisionMask, MappingError> {
    let mut observed = vec![None; ns.len()];
    assign_preorder(tree.root(), ns, &mut observed)?;
    fill_unused(ns, &mut observed);
    Ok(SupervisionMask { observed })
}

/// Text form: a `#tokens=N<TAB>vocab=HASH` header, then `child<TAB>parent`
/// for every non-`Root` node.
pub fn write_parse(parse: &ParseTree, vocab_hash: &str) -> String {
    let mut out = format!(
        "#tokens={}\tvocab={}\n",
        parse.node_set().token_count(),
        vocab_hash
    );
    for (c, p) in parse.edges() {
        out.push_str(&format!("{c}\t{p}\n"));
    }
    out
}

pub fn read_parse(text: &str, vocab: &Vocabulary) -> Result<ParseTree, MappingError> {
    let fmt_err = |line: usize, message: &str| MappingError::Format {
        line,
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| fmt_err(1, "missing header"))?;
    let (tok, hash) = header
        .strip_prefix("#tokens=")
        .and_then(|h| h.split_once("\tvocab="))
        .ok_or_else(|| fmt_err(1, "malformed header"))?;
    let token_count: usize = tok.parse().map_err(|_| fmt_err(1, "bad token count"))?;
    if hash != vocab.hash() {
        return Err(MappingError::VocabMismatch {
            expected: vocab.hash(),
            found: hash.to_string(),
        });
    }
    let ns = crate::symbol_table::build_node_set(&vec![""; token_count], vocab);
    let mut parent = vec![None; ns.len()];
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.is_empty() {
            continue;
        }
        let (c, p) = line
            .split_once('\t')
            .ok_or_else(|| fmt_err(line_no, "expected child<TAB>parent"))?;
        let c: usize = c.parse().map_err(|_| fmt_err(line_no, "bad child id"))?;
        let p: usize = p.parse().map_err(|_| fmt_err(line_no, "bad parent id"))?;
        if c >= ns.len() || parent[c].is_some() {
            return Err(fmt_err(line_no, "child id out of range or repeated"));
        }
        parent[c] = Some(p);
    }
    ParseTree::new(ns, parent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol_table::{build_node_set, build_vocabulary};
    use crate::top_ir::fixtures::*;
    use crate::top_ir::{parse_top, SupervisionMode};

    fn fig_vocab() -> Vocabulary {
        // Fig. 2 draws IN:GET_EVENT and SL:DATE_TIME as unused replicas.
        build_vocabulary([&fig1(), &fig5()]).unwrap()
    }

    fn idx(ns: &NodeSet, name: &str) -> usize {
        ns.names().iter().position(|n| n == name).unwrap()
    }

    #[test]
    fn fig1_maps_to_fig2_edges() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let parse = top_to_parse(&fig1(), &ns).unwrap();
        let p = |c: &str| ns.name(parse.parent(idx(&ns, c)).unwrap());
        assert_eq!(p("IN:GET_DIRECTION#1"), "ROOT");
        assert_eq!(p("tok:0"), "IN:GET_DIRECTION#1");
        assert_eq!(p("tok:1"), "IN:GET_DIRECTION#1");
        assert_eq!(p("SL:DESTINATION#1"), "IN:GET_DIRECTION#1");
        assert_eq!(p("IN:FIND_EVENT#1"), "SL:DESTINATION#1");
        assert_eq!(p("SL:ORGANIZER#1"), "IN:FIND_EVENT#1");
        assert_eq!(p("tok:3"), "IN:FIND_EVENT#1");
        assert_eq!(p("SL:CATEGORY#1"), "IN:FIND_EVENT#1");
        assert_eq!(p("tok:2"), "SL:ORGANIZER#1");
        assert_eq!(p("tok:4"), "SL:CATEGORY#1");
        assert_eq!(p("IN:GET_EVENT#1"), "UNUSED");
        assert_eq!(p("SL:DATE_TIME#1"), "UNUSED");
        assert_eq!(p("IN:GET_DIRECTION#2"), "UNUSED");
        assert_eq!(p("UNUSED"), "ROOT");
        assert_eq!(parse_to_top(&parse, &FIG1_TOKENS).unwrap(), fig1());
    }

    #[test]
    fn fig5_preorder_indices() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG5_TOKENS, &v);
        let parse = top_to_parse(&fig5(), &ns).unwrap();
        assert_eq!(parse.parent(0), Some(idx(&ns, "SL:DATE_TIME#1")));
        assert_eq!(parse.parent(2), Some(idx(&ns, "SL:DATE_TIME#2")));
        assert_eq!(parse.parent(3), Some(idx(&ns, "SL:DATE_TIME#2")));
        for i in 3..=4 {
            let r = idx(&ns, &format!("SL:DATE_TIME#{i}"));
            assert_eq!(parse.parent(r), Some(ns.unused()));
        }
        assert_eq!(parse_to_top(&parse, &FIG5_TOKENS).unwrap(), fig5());
    }

    #[test]
    fn nested_repeat_uses_preorder_not_position() {
        // The outer SL:X is visited first even though its own token is last.
        let toks = ["a", "b", "c"];
        let t = parse_top("[IN:A [SL:X [IN:B [SL:X a ] b ] c ] ]", &toks).unwrap();
        let v = build_vocabulary([&t]).unwrap();
        let ns = build_node_set(&toks, &v);
        let parse = top_to_parse(&t, &ns).unwrap();
        let x1 = idx(&ns, "SL:X#1");
        let x2 = idx(&ns, "SL:X#2");
        assert_eq!(parse.parent(x1), Some(idx(&ns, "IN:A#1")));
        assert_eq!(parse.parent(0), Some(x2));
        assert_eq!(parse.parent(2), Some(x1));
        assert_eq!(parse_to_top(&parse, &toks).unwrap(), t);
    }

    #[test]
    fn unused_symbol_all_replicas_under_unused() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let parse = top_to_parse(&fig1(), &ns).unwrap();
        let id = v.id(&crate::top_ir::SymbolLabel::new("IN:GET_EVENT").unwrap()).unwrap();
        for r in ns.replicas(id) {
            assert_eq!(parse.parent(r), Some(ns.unused()));
        }
    }

    #[test]
    fn budget_exceeded() {
        let toks = ["a", "b", "c", "d"];
        let t = parse_top(
            "[IN:A [SL:X a ] [SL:X b ] [SL:X c ] [SL:X d ] ]",
            &toks,
        )
        .unwrap();
        let small = build_vocabulary([&fig5(), &parse_top("[IN:A [SL:X a ] ]", &["a"]).unwrap()])
            .unwrap();
        let ns = build_node_set(&toks, &small);
        // SL:X has k = 1, so 3 replicas for 4 occurrences.
        assert!(matches!(
            top_to_parse(&t, &ns),
            Err(MappingError::ReplicaBudgetExceeded { budget: 3, .. })
        ));
    }

    #[test]
    fn flat_parse() {
        let toks = ["t1", "t2", "t3"];
        let v = fig_vocab();
        let ns = build_node_set(&toks, &v);
        let x = idx(&ns, "IN:GET_EVENT#1");
        let mut parent: Vec<Option<usize>> = (0..ns.len()).map(|_| Some(ns.unused())).collect();
        parent[..3].fill(Some(x));
        parent[x] = Some(ns.root());
        parent[ns.root()] = None;
        parent[ns.unused()] = Some(ns.root());
        let parse = ParseTree::new(ns, parent).unwrap();
        assert_eq!(
            parse_to_top(&parse, &toks).unwrap().to_string(),
            "[IN:GET_EVENT t1 t2 t3 ]"
        );
    }

    fn flat_parents(ns: &NodeSet, head: usize) -> Vec<Option<usize>> {
        let mut parent: Vec<Option<usize>> = vec![Some(ns.unused()); ns.len()];
        for t in 0..ns.token_count() {
            parent[t] = Some(head);
        }
        parent[head] = Some(ns.root());
        parent[ns.root()] = None;
        parent[ns.unused()] = Some(ns.root());
        parent
    }

    #[test]
    fn invalid_parses_are_rejected() {
        let v = fig_vocab();
        let ns = build_node_set(&["a", "b"], &v);
        let head = idx(&ns, "IN:GET_EVENT#1");
        let ok = flat_parents(&ns, head);
        assert!(ParseTree::new(ns.clone(), ok.clone()).is_ok());

        let mut token_parent = ok.clone();
        token_parent[1] = Some(0);
        assert!(ParseTree::new(ns.clone(), token_parent).is_err());

        let mut two_roots = ok.clone();
        two_roots[idx(&ns, "SL:DATE_TIME#1")] = Some(ns.root());
        assert!(ParseTree::new(ns.clone(), two_roots).is_err());

        let mut deep_unused = ok.clone();
        deep_unused[idx(&ns, "SL:DATE_TIME#1")] = Some(idx(&ns, "IN:FIND_EVENT#1"));
        assert!(ParseTree::new(ns.clone(), deep_unused).is_err());

        let mut unused_moved = ok.clone();
        unused_moved[ns.unused()] = Some(head);
        assert!(ParseTree::new(ns.clone(), unused_moved).is_err());

        let mut cycle = ok.clone();
        let (a, b) = (idx(&ns, "SL:DATE_TIME#1"), idx(&ns, "IN:FIND_EVENT#1"));
        cycle[a] = Some(b);
        cycle[b] = Some(a);
        assert!(ParseTree::new(ns.clone(), cycle).is_err());
    }

    #[test]
    fn inversion_errors() {
        let v = fig_vocab();
        let toks = ["a", "b"];
        let ns = build_node_set(&toks, &v);
        let head = idx(&ns, "IN:GET_EVENT#1");

        let mut dropped = flat_parents(&ns, head);
        dropped[1] = Some(ns.unused());
        let p = ParseTree::new(ns.clone(), dropped).unwrap();
        assert_eq!(parse_to_top(&p, &toks), Err(MappingError::DroppedToken(1)));

        let mut empty_slot = flat_parents(&ns, head);
        empty_slot[idx(&ns, "SL:DATE_TIME#1")] = Some(head);
        let p = ParseTree::new(ns.clone(), empty_slot).unwrap();
        assert!(matches!(
            parse_to_top(&p, &toks),
            Err(MappingError::UnanchoredSubtree(_))
        ));

        let mut nested = flat_parents(&ns, head);
        let other = idx(&ns, "IN:FIND_EVENT#1");
        nested[other] = Some(head);
        nested[1] = Some(other);
        let p = ParseTree::new(ns.clone(), nested).unwrap();
        assert!(matches!(
            parse_to_top(&p, &toks),
            Err(MappingError::Tree(TopError::IllegalNesting { .. }))
        ));

        let slot_root = flat_parents(&ns, idx(&ns, "SL:DATE_TIME#1"));
        let p = ParseTree::new(ns.clone(), slot_root).unwrap();
        assert!(matches!(
            parse_to_top(&p, &toks),
            Err(MappingError::Tree(TopError::RootNotIntent(_)))
        ));
    }

    #[test]
    fn non_projective_parse_is_rejected() {
        let toks = ["a", "b", "c"];
        let t = parse_top("[IN:A [SL:X a ] b [SL:Y c ] ]", &toks).unwrap();
        let v = build_vocabulary([&t]).unwrap();
        let ns = build_node_set(&toks, &v);
        let mut parent = top_to_parse(&t, &ns).unwrap().parents().to_vec();
        // Move "c" under SL:X, giving SL:X the discontinuous yield {a, c}.
        parent[2] = Some(idx(&ns, "SL:X#1"));
        parent[idx(&ns, "SL:Y#1")] = Some(ns.unused());
        let p = ParseTree::new(ns, parent).unwrap();
        assert!(matches!(
            parse_to_top(&p, &toks),
            Err(MappingError::Tree(TopError::TokenOrder(_)))
        ));
    }

    #[test]
    fn fig3_terminal_mask() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let partial = PartialTree::project(&fig1(), SupervisionMode::TerminalOnly);
        let mask = extract_mask(&partial, &ns).unwrap();
        let edges: Vec<(String, String)> = mask
            .edges()
            .map(|(c, p)| (ns.name(c), ns.name(p)))
            .collect();
        let expect = [
            ("tok:0", "IN:GET_DIRECTION#1"),
            ("tok:1", "IN:GET_DIRECTION#1"),
            ("tok:2", "SL:ORGANIZER#1"),
            ("tok:3", "IN:FIND_EVENT#1"),
            ("tok:4", "SL:CATEGORY#1"),
        ];
        let expect: Vec<(String, String)> = expect
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        assert_eq!(edges, expect);
    }

    #[test]
    fn fig4_nonterminal_mask() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let partial = PartialTree::project(&fig1(), SupervisionMode::NonterminalOnly);
        let mask = extract_mask(&partial, &ns).unwrap();
        for t in 0..ns.token_count() {
            assert_eq!(mask.parent_of(t), None);
        }
        let p = |c: &str| mask.parent_of(idx(&ns, c)).map(|p| ns.name(p));
        assert_eq!(p("IN:GET_DIRECTION#1").as_deref(), Some("ROOT"));
        assert_eq!(p("SL:DESTINATION#1").as_deref(), Some("IN:GET_DIRECTION#1"));
        assert_eq!(p("IN:FIND_EVENT#1").as_deref(), Some("SL:DESTINATION#1"));
        assert_eq!(p("SL:ORGANIZER#1").as_deref(), Some("IN:FIND_EVENT#1"));
        assert_eq!(p("SL:CATEGORY#1").as_deref(), Some("IN:FIND_EVENT#1"));
        assert_eq!(p("SL:DATE_TIME#3").as_deref(), Some("UNUSED"));
        assert_eq!(p("UNUSED").as_deref(), Some("ROOT"));
        assert_eq!(mask.observed_count(), ns.len() - 1 - ns.token_count());
    }

    #[test]
    fn full_mask_covers_every_non_root_node() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let full = extract_mask(&PartialTree::Full(fig1()), &ns).unwrap();
        assert_eq!(full.observed_count(), ns.len() - 1);
        let parse = top_to_parse(&fig1(), &ns).unwrap();
        assert_eq!(full.edges().collect::<Vec<_>>(), parse.edges().collect::<Vec<_>>());
        let (tok, sym) = full.split_by_child(&ns);
        let term = extract_mask(
            &PartialTree::project(&fig1(), SupervisionMode::TerminalOnly),
            &ns,
        )
        .unwrap();
        let non = extract_mask(
            &PartialTree::project(&fig1(), SupervisionMode::NonterminalOnly),
            &ns,
        )
        .unwrap();
        assert_eq!(tok, term);
        assert_eq!(sym, non);
    }

    #[test]
    fn parse_file_round_trip() {
        let v = fig_vocab();
        let ns = build_node_set(&FIG1_TOKENS, &v);
        let parse = top_to_parse(&fig1(), &ns).unwrap();
        let text = write_parse(&parse, &v.hash());
        assert!(text.starts_with("#tokens=5\tvocab="));
        assert_eq!(read_parse(&text, &v).unwrap(), parse);
        let other = build_vocabulary([&fig1()]).unwrap();
        assert!(matches!(
            read_parse(&text, &other),
            Err(MappingError::VocabMismatch { .. })
        ));
    }
}
