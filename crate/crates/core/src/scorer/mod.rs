//! Neural edge scorer: joint node encoder, biaffine head, masked likelihood
//! and a deterministic training loop.

mod biaffine;
mod checkpoint;
mod config;
mod encoder;
mod likelihood;
mod params;
mod train;

use std::collections::HashMap;

use ndarray::Array2;
use rand::RngCore;
use thiserror::Error;

pub use biaffine::score_edges;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use config::{ModelConfig, Optimizer, TrainConfig};
pub use encoder::{embed, encode, NodeInput};
pub use likelihood::{log_likelihood, masked_log_likelihood, parent_distribution};
pub use params::{LayerParams, Params};
pub use train::{train, LossTrace, TrainExample};

use crate::decoder::{decode_with, DecodeError, DecodeOptions, DecodeResult, ScoreMatrix};
use crate::mapping::{MappingError, SupervisionMask};
use crate::scalar::Real;
use crate::symbol_table::{build_node_set, Node, NodeSet, VocabError, Vocabulary};

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("observed edge {parent} -> {child} is not in the parse")]
    MaskMismatch { child: usize, parent: usize },
    #[error("observed edge {parent} -> {child} is structurally forbidden")]
    ForbiddenEdge { child: usize, parent: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("non-finite loss {loss} at step {step}")]
    NonFiniteLoss { step: usize, loss: f64 },
    #[error("example {index}: {source}")]
    Example { index: usize, source: MappingError },
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Word-to-row map of the token embedding table. Row 0 is the unknown word.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl WordTable {
    pub fn new(words: Vec<String>) -> Self {
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i + 1)).collect();
        WordTable { words, index }
    }

    /// Sorted distinct words of the given token sequences.
    pub fn from_tokens<'a>(sentences: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut words: Vec<String> = sentences.into_iter().flatten().cloned().collect();
        words.sort_unstable();
        words.dedup();
        Self::new(words)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.index.get(word).copied().unwrap_or(0)
    }
}

/// A trained scorer together with the vocabularies it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub config: TrainConfig,
    pub params: Params<T>,
    pub words: WordTable,
    pub vocab: Vocabulary,
}

/// Rows of the symbol-replica table: one per symbol node of any node set
/// built from `vocab`.
pub fn symbol_rows(vocab: &Vocabulary) -> usize {
    (0..vocab.len()).map(|i| vocab.replicas(i)).sum()
}

impl<T: Real> Model<T> {
    pub fn node_set(&self, tokens: &[impl AsRef<str>]) -> NodeSet {
        build_node_set(tokens, &self.vocab)
    }

    pub fn inputs(&self, tokens: &[impl AsRef<str>], ns: &NodeSet) -> Vec<NodeInput> {
        node_inputs(&self.words, tokens, ns)
    }

    /// Contextualized encodings of every node of `ns`.
    pub fn encode(&self, tokens: &[impl AsRef<str>], ns: &NodeSet) -> Array2<T> {
        encode(&self.params, &self.config.model, &self.inputs(tokens, ns))
    }

    pub fn scores(&self, tokens: &[impl AsRef<str>]) -> Result<ScoreMatrix<T>, ScorerError> {
        let ns = self.node_set(tokens);
        let enc = self.encode(tokens, &ns);
        let (s, _) = biaffine::head_forward(&self.params, &enc);
        Ok(biaffine::to_matrix(&s, &ns)?)
    }

    pub fn decode(
        &self,
        tokens: &[impl AsRef<str>],
        options: &DecodeOptions,
    ) -> Result<DecodeResult<T>, ScorerError> {
        Ok(decode_with(&self.scores(tokens)?, options)?)
    }

    /// Negative masked log-likelihood of one example; gradients are added to
    /// `grads` when given. `rng` enables dropout.
    pub fn loss(
        &self,
        inputs: &[NodeInput],
        ns: &NodeSet,
        mask: &SupervisionMask,
        grads: Option<&mut Params<T>>,
        rng: Option<&mut (dyn RngCore + 'static)>,
    ) -> Result<T, ScorerError> {
        example_loss(&self.params, &self.config.model, inputs, ns, mask, grads, rng)
    }
}

pub(crate) fn node_inputs(words: &WordTable, tokens: &[impl AsRef<str>], ns: &NodeSet) -> Vec<NodeInput> {
    let t = ns.token_count();
    ns.nodes()
        .iter()
        .enumerate()
        .map(|(i, node)| match *node {
            Node::Token(position) => NodeInput::Token {
                word: words.id(tokens[position].as_ref()),
                position,
            },
            Node::Symbol { .. } => NodeInput::Symbol(i - t),
            Node::Root => NodeInput::Root,
            Node::Unused => NodeInput::Unused,
        })
        .collect()
}

pub(crate) fn example_loss<T: Real>(
    params: &Params<T>,
    config: &ModelConfig,
    inputs: &[NodeInput],
    ns: &NodeSet,
    mask: &SupervisionMask,
    grads: Option<&mut Params<T>>,
    rng: Option<&mut (dyn RngCore + 'static)>,
) -> Result<T, ScorerError> {
    let (enc, caches) = encoder::forward(params, config, inputs, rng);
    let (s, head) = biaffine::head_forward(params, &enc);
    let (loss, ds) = likelihood::loss_and_grad(&s, ns, mask)?;
    if let Some(g) = grads {
        let denc = biaffine::head_backward(params, &enc, &head, &ds, g);
        encoder::backward(params, config, inputs, &caches, denc, g);
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_table_lookup() {
        let s1 = vec!["b".to_string(), "a".to_string()];
        let s2 = vec!["a".to_string(), "c".to_string()];
        let w = WordTable::from_tokens([s1.as_slice(), s2.as_slice()]);
        assert_eq!(w.words(), ["a", "b", "c"]);
        assert_eq!(w.id("a"), 1);
        assert_eq!(w.id("c"), 3);
        assert_eq!(w.id("zzz"), 0);
    }
}
