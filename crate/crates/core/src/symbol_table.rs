//! Output vocabulary, replica budgets and the per-query node set.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::top_ir::{PartialTree, SymbolLabel, TopError, TopTree};

/// Replicas per symbol beyond the largest per-tree count seen in training.
pub const EXTRA_REPLICAS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("vocabulary line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: TopError,
    },
    #[error("unknown node name {0:?}")]
    NodeName(String),
    #[error("node names violate the canonical ordering at index {0}")]
    NodeOrder(usize),
}

/// Output symbols in lexicographic order, each with the largest number of
/// times it occurs in a single training tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<SymbolLabel>,
    max_occurrences: Vec<usize>,
    index: HashMap<SymbolLabel, usize>,
    replica_override: Option<usize>,
}

impl Vocabulary {
    /// Builds from per-example symbol occurrence lists.
    pub fn from_occurrences<'a, I, S>(examples: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a SymbolLabel>,
    {
        let mut max: BTreeMap<SymbolLabel, usize> = BTreeMap::new();
        let mut seen = false;
        for example in examples {
            seen = true;
            let mut counts: HashMap<&SymbolLabel, usize> = HashMap::new();
            for label in example {
                *counts.entry(label).or_default() += 1;
            }
            for (label, c) in counts {
                let entry = max.entry(label.clone()).or_default();
                *entry = (*entry).max(c);
            }
        }
        if !seen {
            return Err(VocabError::EmptyCorpus);
        }
        Ok(Self::from_counts(max))
    }

    fn from_counts(max: BTreeMap<SymbolLabel, usize>) -> Self {
        let (symbols, max_occurrences): (Vec<_>, Vec<_>) = max.into_iter().unzip();
        let index = symbols
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Vocabulary {
            symbols,
            max_occurrences,
            index,
            replica_override: None,
        }
    }

    pub fn symbols(&self) -> &[SymbolLabel] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id(&self, label: &SymbolLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn max_occurrences(&self, label: &SymbolLabel) -> Option<usize> {
        self.id(label).map(|i| self.max_occurrences[i])
    }

    /// Number of replica nodes for symbol `id`: `k + 2`, unless overridden.
    pub fn replicas(&self, id: usize) -> usize {
        self.replica_override
            .unwrap_or(self.max_occurrences[id] + EXTRA_REPLICAS)
    }

    /// Replaces the `k + 2` rule with a fixed replica count for every symbol.
    pub fn with_replica_override(mut self, replicas: Option<usize>) -> Self {
        self.replica_override = replicas;
        self
    }

    pub fn replica_override(&self) -> Option<usize> {
        self.replica_override
    }

    /// Text form: one `NAME<TAB>k` line per symbol.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(r) = self.replica_override {
            out.push_str(&format!("#replicas\t{r}\n"));
        }
        for (s, k) in self.symbols.iter().zip(&self.max_occurrences) {
            out.push_str(&format!("{}\t{}\n", s.name(), k));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, VocabError> {
        let mut max = BTreeMap::new();
        let mut replica_override = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let (name, k) = line.split_once('\t').ok_or_else(|| VocabError::Format {
                line: line_no,
                message: "expected NAME<TAB>k".into(),
            })?;
            let k: usize = k.parse().map_err(|_| VocabError::Format {
                line: line_no,
                message: format!("bad count {k:?}"),
            })?;
            if name == "#replicas" {
                replica_override = Some(k);
                continue;
            }
            if k == 0 {
                return Err(VocabError::Format {
                    line: line_no,
                    message: "count must be at least 1".into(),
                });
            }
            let label = SymbolLabel::new(name).map_err(|source| VocabError::Label {
                line: line_no,
                source,
            })?;
            if max.insert(label, k).is_some() {
                return Err(VocabError::Format {
                    line: line_no,
                    message: format!("duplicate symbol {name}"),
                });
            }
        }
        Ok(Self::from_counts(max).with_replica_override(replica_override))
    }

    /// Short content hash of the text form, used to pair files with models.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds the vocabulary from fully annotated training trees.
pub fn build_vocabulary<'a>(
    corpus: impl IntoIterator<Item = &'a TopTree>,
) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_occurrences(corpus.into_iter().map(|t| t.root().symbols()))
}

/// Builds the vocabulary from partially annotated trees. Terminal-only
/// examples contribute only the symbols that label tokens.
pub fn build_vocabulary_partial<'a>(
    corpus: impl IntoIterator<Item = &'a PartialTree>,
) -> Result<Vocabulary, VocabError> {
    Vocabulary::from_occurrences(corpus.into_iter().map(PartialTree::symbols))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Token(usize),
    /// Replica `index` (1-based) of vocabulary symbol `symbol`.
    Symbol { symbol: usize, index: usize },
    Root,
    Unused,
}

/// The nodes of every candidate parse for one query, in canonical order:
/// tokens, symbol replicas (vocabulary order, then index), `Root`, `Unused`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    nodes: Vec<Node>,
    token_count: usize,
    labels: Vec<SymbolLabel>,
    offsets: Vec<usize>,
}

/// Builds `N(x)` for a query of `query_tokens.len()` tokens.
pub fn build_node_set(query_tokens: &[impl AsRef<str>], vocab: &Vocabulary) -> NodeSet {
    NodeSet::new(
        query_tokens.len(),
        vocab.symbols().to_vec(),
        (0..vocab.len()).map(|i| vocab.replicas(i)).collect(),
    )
}

impl NodeSet {
    pub fn new(token_count: usize, labels: Vec<SymbolLabel>, replicas: Vec<usize>) -> Self {
        assert_eq!(labels.len(), replicas.len());
        let mut nodes: Vec<Node> = (0..token_count).map(Node::Token).collect();
        let mut offsets = Vec::with_capacity(labels.len() + 1);
        for (symbol, &r) in replicas.iter().enumerate() {
            offsets.push(nodes.len());
            nodes.extend((1..=r).map(|index| Node::Symbol { symbol, index }));
        }
        offsets.push(nodes.len());
        nodes.push(Node::Root);
        nodes.push(Node::Unused);
        NodeSet {
            nodes,
            token_count,
            labels,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Node {
        self.nodes[i]
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn labels(&self) -> &[SymbolLabel] {
        &self.labels
    }

    pub fn root(&self) -> usize {
        self.nodes.len() - 2
    }

    pub fn unused(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_token(&self, i: usize) -> bool {
        i < self.token_count
    }

    pub fn is_symbol(&self, i: usize) -> bool {
        i >= self.token_count && i < self.root()
    }

    pub fn token_index(&self, position: usize) -> Option<usize> {
        (position < self.token_count).then_some(position)
    }

    pub fn symbol_id(&self, label: &SymbolLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Node indices of all replicas of vocabulary symbol `symbol`.
    pub fn replicas(&self, symbol: usize) -> Range<usize> {
        self.offsets[symbol]..self.offsets[symbol + 1]
    }

    /// Node index of replica `index` (1-based) of `symbol`.
    pub fn replica(&self, symbol: usize, index: usize) -> Option<usize> {
        let r = self.replicas(symbol);
        (index >= 1 && index <= r.len()).then(|| r.start + index - 1)
    }

    pub fn label_of(&self, i: usize) -> Option<&SymbolLabel> {
        match self.nodes[i] {
            Node::Symbol { symbol, .. } => Some(&self.labels[symbol]),
            _ => None,
        }
    }

    /// Stable textual node name: `tok:3`, `IN:NAME#2`, `ROOT`, `UNUSED`.
    pub fn name(&self, i: usize) -> String {
        match self.nodes[i] {
            Node::Token(p) => format!("tok:{p}"),
            Node::Symbol { symbol, index } => format!("{}#{}", self.labels[symbol], index),
            Node::Root => "ROOT".to_string(),
            Node::Unused => "UNUSED".to_string(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.len()).map(|i| self.name(i)).collect()
    }

    /// Rebuilds a node set from [`NodeSet::names`], enforcing canonical order.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self, VocabError> {
        let mut token_count = 0;
        let mut labels: Vec<SymbolLabel> = Vec::new();
        let mut replicas: Vec<usize> = Vec::new();
        let mut stage = 0; // 0 tokens, 1 symbols, 2 root, 3 unused
        for (i, name) in names.iter().enumerate() {
            let name = name.as_ref();
            let bad = || VocabError::NodeOrder(i);
            if let Some(p) = name.strip_prefix("tok:") {
                let p: usize = p.parse().map_err(|_| VocabError::NodeName(name.into()))?;
                if stage != 0 || p != token_count {
                    return Err(bad());
                }
                token_count += 1;
            } else if name == "ROOT" {
                if stage > 1 {
                    return Err(bad());
                }
                stage = 2;
            } else if name == "UNUSED" {
                if stage != 2 {
                    return Err(bad());
                }
                stage = 3;
            } else {
                let (label, idx) = name
                    .rsplit_once('#')
                    .ok_or_else(|| VocabError::NodeName(name.into()))?;
                let idx: usize = idx.parse().map_err(|_| VocabError::NodeName(name.into()))?;
                let label =
                    SymbolLabel::new(label).map_err(|_| VocabError::NodeName(name.into()))?;
                if stage > 1 {
                    return Err(bad());
                }
                stage = 1;
                match labels.last() {
                    Some(last) if *last == label => {
                        let r = replicas.last_mut().unwrap();
                        if idx != *r + 1 {
                            return Err(bad());
                        }
                        *r += 1;
                    }
                    last => {
                        if idx != 1 || last.is_some_and(|l| *l >= label) {
                            return Err(bad());
                        }
                        labels.push(label);
                        replicas.push(1);
                    }
                }
            }
        }
        if stage != 3 {
            return Err(VocabError::NodeOrder(names.len()));
        }
        Ok(NodeSet::new(token_count, labels, replicas))
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(" "))
    }
}
