//! TOP meaning representations: trees of intents, slots and query tokens.

mod dataset;
mod text;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

pub use dataset::{
    parse_example_line, parse_partial_line, read_examples, read_partial_examples, scan_examples,
    write_example_line, write_partial_line, DatasetError, Example, PartialExample,
};
pub use text::{
    parse_fragments, parse_symbol_tree, parse_top, serialize_fragments, serialize_node,
    serialize_top,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopError {
    #[error("unbalanced brackets")]
    UnbalancedBrackets,
    #[error("empty tree")]
    EmptyTree,
    #[error("token mismatch at position {position}: expected {expected:?}, found {found:?}")]
    TokenMismatch {
        position: usize,
        expected: Option<String>,
        found: Option<String>,
    },
    #[error("illegal nesting: {child} under {parent}")]
    IllegalNesting { parent: String, child: String },
    #[error("tree root must be an intent, found {0}")]
    RootNotIntent(String),
    #[error("invalid symbol label {0:?} (expected IN: or SL: prefix)")]
    InvalidLabel(String),
    #[error("token {0:?} not allowed in a token-free tree")]
    UnexpectedToken(String),
    #[error("token positions are not strictly increasing at {0}")]
    TokenOrder(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Intent,
    Slot,
}

/// An intent (`IN:`) or slot (`SL:`) label. Labels are case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolLabel {
    kind: SymbolKind,
    name: String,
}

impl SymbolLabel {
    pub fn new(name: impl Into<String>) -> Result<Self, TopError> {
        let name = name.into();
        let kind = if name.len() > 3 && name.starts_with("IN:") {
            SymbolKind::Intent
        } else if name.len() > 3 && name.starts_with("SL:") {
            SymbolKind::Slot
        } else {
            return Err(TopError::InvalidLabel(name));
        };
        if name.chars().any(|c| c.is_whitespace() || c == '[' || c == ']') {
            return Err(TopError::InvalidLabel(name));
        }
        Ok(SymbolLabel { kind, name })
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_intent(&self) -> bool {
        self.kind == SymbolKind::Intent
    }
}

// Vocabulary order is lexicographic by name.
impl Ord for SymbolLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name.cmp(&other.name)
    }
}

impl PartialOrd for SymbolLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SymbolLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenRef {
    pub position: usize,
    pub text: String,
}

impl TokenRef {
    pub fn new(position: usize, text: impl Into<String>) -> Self {
        TokenRef {
            position,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TopNode {
    Symbol {
        label: SymbolLabel,
        children: Vec<TopNode>,
    },
    Token(TokenRef),
}

impl TopNode {
    pub fn symbol(label: SymbolLabel, children: Vec<TopNode>) -> Self {
        TopNode::Symbol { label, children }
    }

    pub fn token(position: usize, text: impl Into<String>) -> Self {
        TopNode::Token(TokenRef::new(position, text))
    }

    pub fn label(&self) -> Option<&SymbolLabel> {
        match self {
            TopNode::Symbol { label, .. } => Some(label),
            TopNode::Token(_) => None,
        }
    }

    pub fn children(&self) -> &[TopNode] {
        match self {
            TopNode::Symbol { children, .. } => children,
            TopNode::Token(_) => &[],
        }
    }

    /// Visits nodes in pre-order.
    pub fn preorder<'a>(&'a self, visit: &mut impl FnMut(&'a TopNode)) {
        visit(self);
        for child in self.children() {
            child.preorder(visit);
        }
    }

    /// Token leaves in tree order.
    pub fn leaves(&self) -> Vec<&TokenRef> {
        let mut out = Vec::new();
        self.preorder(&mut |node| {
            if let TopNode::Token(t) = node {
                out.push(t);
            }
        });
        out
    }

    /// Symbol labels in pre-order.
    pub fn symbols(&self) -> Vec<&SymbolLabel> {
        let mut out = Vec::new();
        self.preorder(&mut |node| {
            if let Some(l) = node.label() {
                out.push(l);
            }
        });
        out
    }

    /// Number of symbol levels on the longest root-to-leaf path.
    pub fn symbol_depth(&self) -> usize {
        match self {
            TopNode::Token(_) => 0,
            TopNode::Symbol { children, .. } => {
                1 + children.iter().map(TopNode::symbol_depth).max().unwrap_or(0)
            }
        }
    }

    /// Checks intent/slot alternation below this node.
    fn check_nesting(&self) -> Result<(), TopError> {
        if let TopNode::Symbol { label, children } = self {
            for child in children {
                if let Some(cl) = child.label() {
                    if cl.kind() == label.kind() {
                        return Err(TopError::IllegalNesting {
                            parent: label.name().to_string(),
                            child: cl.name().to_string(),
                        });
                    }
                }
                child.check_nesting()?;
            }
        }
        Ok(())
    }

    /// Copy of this subtree with every token removed.
    pub fn without_tokens(&self) -> Option<TopNode> {
        match self {
            TopNode::Token(_) => None,
            TopNode::Symbol { label, children } => Some(TopNode::Symbol {
                label: label.clone(),
                children: children.iter().filter_map(TopNode::without_tokens).collect(),
            }),
        }
    }
}

/// A full TOP tree over a tokenized query.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopTree {
    root: TopNode,
}

impl TopTree {
    /// Validates the tree invariants: intent root, intent/slot alternation and
    /// token leaves covering positions `0..n` in order.
    pub fn new(root: TopNode) -> Result<Self, TopError> {
        check_symbol_root(&root)?;
        for (i, leaf) in root.leaves().iter().enumerate() {
            if leaf.position != i {
                return Err(TopError::TokenOrder(i));
            }
        }
        Ok(TopTree { root })
    }

    pub fn root(&self) -> &TopNode {
        &self.root
    }

    pub fn into_root(self) -> TopNode {
        self.root
    }

    pub fn tokens(&self) -> Vec<&str> {
        self.root.leaves().iter().map(|t| t.text.as_str()).collect()
    }

    pub fn token_count(&self) -> usize {
        self.root.leaves().len()
    }

    /// Per-token symbol labels: one fragment per symbol occurrence that
    /// directly dominates at least one token, sorted by first token position.
    pub fn terminal_projection(&self) -> Vec<Fragment> {
        let mut out = Vec::new();
        self.root.preorder(&mut |node| {
            if let TopNode::Symbol { label, children } = node {
                let tokens: Vec<TokenRef> = children
                    .iter()
                    .filter_map(|c| match c {
                        TopNode::Token(t) => Some(t.clone()),
                        _ => None,
                    })
                    .collect();
                if !tokens.is_empty() {
                    out.push(Fragment {
                        label: label.clone(),
                        tokens,
                    });
                }
            }
        });
        out.sort_by_key(|f| f.tokens[0].position);
        out
    }

    /// The symbol tree with all token nodes deleted.
    pub fn nonterminal_projection(&self) -> SymbolTree {
        SymbolTree {
            root: self
                .root
                .without_tokens()
                .expect("tree root is a symbol"),
        }
    }
}

fn check_symbol_root(root: &TopNode) -> Result<(), TopError> {
    match root.label() {
        None => Err(TopError::EmptyTree),
        Some(l) if !l.is_intent() => Err(TopError::RootNotIntent(l.name().to_string())),
        Some(_) => root.check_nesting(),
    }
}

impl fmt::Display for TopTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_top(self))
    }
}

/// True iff the trees are identical, including child order and token positions.
pub fn exact_match(predicted: &TopTree, gold: &TopTree) -> bool {
    predicted == gold
}

/// A token-free intent/slot tree (nonterminal-only supervision).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolTree {
    root: TopNode,
}

impl SymbolTree {
    pub fn new(root: TopNode) -> Result<Self, TopError> {
        check_symbol_root(&root)?;
        if let Some(t) = root.leaves().first() {
            return Err(TopError::UnexpectedToken(t.text.clone()));
        }
        Ok(SymbolTree { root })
    }

    pub fn root(&self) -> &TopNode {
        &self.root
    }
}

/// One symbol with the tokens it directly dominates (terminal-only supervision).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fragment {
    pub label: SymbolLabel,
    pub tokens: Vec<TokenRef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SupervisionMode {
    Full,
    TerminalOnly,
    NonterminalOnly,
}

impl SupervisionMode {
    /// Mode column used in partial dataset files.
    pub fn tag(self) -> &'static str {
        match self {
            SupervisionMode::Full => "FULL",
            SupervisionMode::TerminalOnly => "TERM",
            SupervisionMode::NonterminalOnly => "NONTERM",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "FULL" => Some(SupervisionMode::Full),
            "TERM" => Some(SupervisionMode::TerminalOnly),
            "NONTERM" => Some(SupervisionMode::NonterminalOnly),
            _ => None,
        }
    }
}

/// Annotation of a training example under one of the supervision regimes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PartialTree {
    Full(TopTree),
    /// Fragments sorted by first token position, covering every token once.
    TerminalOnly(Vec<Fragment>),
    NonterminalOnly(SymbolTree),
}

impl PartialTree {
    pub fn mode(&self) -> SupervisionMode {
        match self {
            PartialTree::Full(_) => SupervisionMode::Full,
            PartialTree::TerminalOnly(_) => SupervisionMode::TerminalOnly,
            PartialTree::NonterminalOnly(_) => SupervisionMode::NonterminalOnly,
        }
    }

    /// Projects a full tree onto the given supervision regime.
    pub fn project(tree: &TopTree, mode: SupervisionMode) -> Self {
        match mode {
            SupervisionMode::Full => PartialTree::Full(tree.clone()),
            SupervisionMode::TerminalOnly => PartialTree::TerminalOnly(tree.terminal_projection()),
            SupervisionMode::NonterminalOnly => {
                PartialTree::NonterminalOnly(tree.nonterminal_projection())
            }
        }
    }

    /// Symbol occurrences visible in the annotation.
    pub fn symbols(&self) -> Vec<&SymbolLabel> {
        match self {
            PartialTree::Full(t) => t.root().symbols(),
            PartialTree::NonterminalOnly(t) => t.root().symbols(),
            PartialTree::TerminalOnly(frags) => frags.iter().map(|f| &f.label).collect(),
        }
    }

    pub fn serialize(&self) -> String {
        match self {
            PartialTree::Full(t) => serialize_top(t),
            PartialTree::TerminalOnly(frags) => serialize_fragments(frags),
            PartialTree::NonterminalOnly(t) => serialize_node(t.root()),
        }
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const FIG1: &str = "[IN:GET_DIRECTION directions to [SL:DESTINATION [IN:FIND_EVENT \
                            [SL:ORGANIZER John ] 's [SL:CATEGORY party ] ] ] ]";
    pub const FIG1_TOKENS: [&str; 5] = ["directions", "to", "John", "'s", "party"];
    pub const FIG5: &str =
        "[IN:GET_EVENT [SL:DATE_TIME Holiday ] events [SL:DATE_TIME this weekend ] ]";
    pub const FIG5_TOKENS: [&str; 4] = ["Holiday", "events", "this", "weekend"];

    pub fn fig1() -> TopTree {
        parse_top(FIG1, &FIG1_TOKENS).unwrap()
    }

    pub fn fig5() -> TopTree {
        parse_top(FIG5, &FIG5_TOKENS).unwrap()
    }
}
