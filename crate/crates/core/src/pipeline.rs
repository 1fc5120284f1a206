//! Dataset-level operations behind the command-line tool: supervision
//! splits, exact-match evaluation, oracle audits and corpus statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::decoder::{decode, oracle_decode, DecodeError, DecodeResult, ScoreMatrix};
use crate::mapping::{parse_to_top, top_to_parse, MappingError};
use crate::scalar::Score;
use crate::symbol_table::{build_node_set, Vocabulary};
use crate::top_ir::{
    exact_match, Example, PartialExample, PartialTree, SupervisionMode, TopTree,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("split percentages {0:?} do not sum to 100")]
    BadPercentages([u32; 3]),
    #[error("vocabulary hash mismatch: checkpoint has {expected}, input has {found}")]
    VocabMismatch { expected: String, found: String },
    #[error("line {line}: {source}")]
    Mapping {
        line: usize,
        #[source]
        source: MappingError,
    },
    #[error("line {line}: {message}")]
    Decode { line: usize, message: String },
}

/// Bucket sizes for a full / terminal-only / nonterminal-only split of `n`
/// examples. Sizes are floored and the remainder goes to the bucket with the
/// largest percentage (the first one on ties).
pub fn split_counts(n: usize, percent: [u32; 3]) -> Result<[usize; 3], PipelineError> {
    if percent.iter().map(|&p| p as u64).sum::<u64>() != 100 {
        return Err(PipelineError::BadPercentages(percent));
    }
    let mut counts = percent.map(|p| n * p as usize / 100);
    let largest = (0..3)
        .fold(0, |best, i| if percent[i] > percent[best] { i } else { best });
    counts[largest] += n - counts.iter().sum::<usize>();
    Ok(counts)
}

/// Seeded partition into the three supervision regimes. Each bucket keeps
/// the original input order.
pub fn split(
    examples: &[Example],
    percent: [u32; 3],
    seed: u64,
) -> Result<[Vec<PartialExample>; 3], PipelineError> {
    let counts = split_counts(examples.len(), percent)?;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut bucket_of = vec![0; examples.len()];
    for (rank, &i) in order.iter().enumerate() {
        bucket_of[i] = if rank < counts[0] {
            0
        } else if rank < counts[0] + counts[1] {
            1
        } else {
            2
        };
    }
    let modes = [
        SupervisionMode::Full,
        SupervisionMode::TerminalOnly,
        SupervisionMode::NonterminalOnly,
    ];
    let mut out: [Vec<PartialExample>; 3] = Default::default();
    for (ex, &b) in examples.iter().zip(&bucket_of) {
        out[b].push(PartialExample {
            raw: ex.raw.clone(),
            tokens: ex.tokens.clone(),
            tree: PartialTree::project(&ex.tree, modes[b]),
        });
    }
    Ok(out)
}

/// Score matrix that puts 1 on every gold edge and 0 elsewhere.
pub fn gold_scores(tree: &TopTree, vocab: &Vocabulary) -> Result<ScoreMatrix<f64>, MappingError> {
    let ns = build_node_set(&tree.tokens(), vocab);
    let parse = top_to_parse(tree, &ns)?;
    let m = ScoreMatrix::from_fn(ns, |p, c| if parse.parent(c) == Some(p) { 1.0 } else { 0.0 });
    Ok(m.expect("0/1 scores are finite"))
}

/// One decoded example, as written to the prediction dump.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub line: usize,
    /// `Err` when the decoded parse has no TOP reading, for example when a
    /// token was attached to `Unused`.
    pub tree: Result<TopTree, MappingError>,
    pub total_score: T,
    pub repairs: usize,
    pub root_candidates: usize,
}

impl<T: Score> Prediction<T> {
    /// The tree column holds `!` and the reason when there is no tree.
    pub fn to_tsv(&self) -> String {
        let tree = match &self.tree {
            Ok(t) => t.to_string(),
            Err(e) => format!("!{e}").replace('\t', " "),
        };
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.line, tree, self.total_score, self.repairs, self.root_candidates
        )
    }
}

pub fn predictions_tsv<T: Score>(predictions: &[Prediction<T>]) -> String {
    predictions.iter().map(|p| p.to_tsv() + "\n").collect()
}

/// Coarse classification of a wrong prediction, checked in this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ErrorCategory {
    /// The top-level intent differs.
    RootIntent,
    /// The multiset of intent and slot labels differs.
    SymbolLabels,
    /// Token attachments agree but the symbol tree differs.
    SymbolStructure,
    /// The symbol tree agrees but some token hangs elsewhere.
    TokenAttachment,
    /// Both the symbol tree and the token attachments differ.
    Mixed,
    /// The decoded parse does not map back to a TOP tree.
    NoTree,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 6] = [
        ErrorCategory::RootIntent,
        ErrorCategory::SymbolLabels,
        ErrorCategory::SymbolStructure,
        ErrorCategory::TokenAttachment,
        ErrorCategory::Mixed,
        ErrorCategory::NoTree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::RootIntent => "root_intent",
            ErrorCategory::SymbolLabels => "symbol_labels",
            ErrorCategory::SymbolStructure => "symbol_structure",
            ErrorCategory::TokenAttachment => "token_attachment",
            ErrorCategory::Mixed => "mixed",
            ErrorCategory::NoTree => "no_tree",
        }
    }

    /// `None` when the trees match exactly.
    pub fn classify(predicted: &TopTree, gold: &TopTree) -> Option<Self> {
        if exact_match(predicted, gold) {
            return None;
        }
        if predicted.root().label() != gold.root().label() {
            return Some(ErrorCategory::RootIntent);
        }
        let labels = |t: &TopTree| {
            let mut v: Vec<String> = t.root().symbols().iter().map(|s| s.to_string()).collect();
            v.sort();
            v
        };
        if labels(predicted) != labels(gold) {
            return Some(ErrorCategory::SymbolLabels);
        }
        let same_symbols = predicted.nonterminal_projection() == gold.nonterminal_projection();
        let same_tokens = predicted.terminal_projection() == gold.terminal_projection();
        Some(match (same_symbols, same_tokens) {
            (false, true) => ErrorCategory::SymbolStructure,
            (true, _) => ErrorCategory::TokenAttachment,
            (false, false) => ErrorCategory::Mixed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EvalReport {
    pub examples: usize,
    pub correct: usize,
    /// Examples whose decode needed at least one Unused repair.
    pub repaired: usize,
    /// Examples with more than one root-child candidate.
    pub multi_root: usize,
    pub root_fallback: usize,
    pub errors: BTreeMap<ErrorCategory, usize>,
}

fn ratio(num: usize, den: usize) -> String {
    if den == 0 {
        "n/a".to_string()
    } else {
        format!("{:.4}", num as f64 / den as f64)
    }
}

impl EvalReport {
    pub fn accuracy(&self) -> Option<f64> {
        (self.examples > 0).then(|| self.correct as f64 / self.examples as f64)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let n = self.examples;
        let _ = writeln!(s, "examples\t{n}");
        let _ = writeln!(s, "correct\t{}", self.correct);
        let _ = writeln!(s, "exact_match\t{}", ratio(self.correct, n));
        let _ = writeln!(s, "unused_repair_rate\t{}", ratio(self.repaired, n));
        let _ = writeln!(s, "multi_root_rate\t{}", ratio(self.multi_root, n));
        let _ = writeln!(s, "root_fallback_rate\t{}", ratio(self.root_fallback, n));
        for c in ErrorCategory::ALL {
            let count = self.errors.get(&c).copied().unwrap_or(0);
            let _ = writeln!(s, "error.{}\t{count}", c.name());
        }
        s
    }
}

/// Decodes every `(line, example)` with `decode_fn` and scores the results
/// against the gold trees. Output order follows the input.
pub fn evaluate<T, E>(
    gold: &[(usize, Example)],
    mut decode_fn: impl FnMut(&Example) -> Result<DecodeResult<T>, E>,
) -> Result<(EvalReport, Vec<Prediction<T>>), PipelineError>
where
    T: Score,
    E: std::fmt::Display,
{
    let mut report = EvalReport::default();
    let mut predictions = Vec::with_capacity(gold.len());
    for (line, ex) in gold {
        let line = *line;
        let out = decode_fn(ex).map_err(|e| PipelineError::Decode {
            line,
            message: e.to_string(),
        })?;
        let tree = parse_to_top(&out.parse, &ex.tokens);
        let d = out.diagnostics;
        report.examples += 1;
        report.repaired += usize::from(d.unused_depth_repairs > 0);
        report.multi_root += usize::from(d.root_candidates > 1);
        report.root_fallback += usize::from(d.root_fallback);
        let category = match &tree {
            Ok(t) => ErrorCategory::classify(t, &ex.tree),
            Err(_) => Some(ErrorCategory::NoTree),
        };
        match category {
            None => report.correct += 1,
            Some(c) => *report.errors.entry(c).or_default() += 1,
        }
        predictions.push(Prediction {
            line,
            tree,
            total_score: out.total_score,
            repairs: d.unused_depth_repairs,
            root_candidates: d.root_candidates,
        });
    }
    Ok((report, predictions))
}

/// Decoder-versus-oracle comparison over a set of score matrices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub audited: usize,
    /// Instances above the oracle bound.
    pub skipped: usize,
    /// Instances where the decoder reached the optimum.
    pub exact: usize,
    /// Sum of `oracle - decode` over the inexact instances.
    pub gap_sum: f64,
    pub max_gap: f64,
    /// Instances with no Unused repair and a single root candidate.
    pub clean: usize,
    pub clean_exact: usize,
    /// Instances where decode beat the oracle. Nonzero means a bug.
    pub above_oracle: usize,
}

impl AuditReport {
    pub fn mean_gap(&self) -> Option<f64> {
        let inexact = self.audited - self.exact;
        (inexact > 0).then(|| self.gap_sum / inexact as f64)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "audited\t{}", self.audited);
        let _ = writeln!(s, "skipped_too_large\t{}", self.skipped);
        let _ = writeln!(s, "exact\t{}", self.exact);
        let _ = writeln!(s, "exact_fraction\t{}", ratio(self.exact, self.audited));
        let mean = self.mean_gap().map_or("n/a".to_string(), |g| format!("{g:.4}"));
        let _ = writeln!(s, "mean_gap\t{mean}");
        let _ = writeln!(s, "max_gap\t{:.4}", self.max_gap);
        let _ = writeln!(s, "clean\t{}", self.clean);
        let _ = writeln!(s, "clean_exact\t{}", self.clean_exact);
        let _ = writeln!(s, "above_oracle\t{}", self.above_oracle);
        s
    }
}

pub fn audit<T: Score>(
    instances: impl IntoIterator<Item = ScoreMatrix<T>>,
    bound: usize,
) -> Result<AuditReport, DecodeError> {
    let mut r = AuditReport::default();
    for m in instances {
        let (_, best) = match oracle_decode(&m, bound) {
            Ok(x) => x,
            Err(DecodeError::TooLarge { .. }) => {
                r.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let out = decode(&m)?;
        r.audited += 1;
        let d = out.diagnostics;
        let clean = d.unused_depth_repairs == 0 && d.root_candidates == 1 && !d.root_fallback;
        r.clean += usize::from(clean);
        if out.total_score > best {
            r.above_oracle += 1;
        } else if out.total_score < best {
            let gap = Score::to_f64(best) - Score::to_f64(out.total_score);
            r.gap_sum += gap;
            r.max_gap = r.max_gap.max(gap);
        } else {
            r.exact += 1;
            r.clean_exact += usize::from(clean);
        }
    }
    Ok(r)
}

/// Corpus summary for the `stats` command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusStats {
    pub examples: usize,
    pub modes: BTreeMap<&'static str, usize>,
    pub tokens: usize,
    pub max_tokens: usize,
    pub intents: usize,
    pub slots: usize,
    /// Deepest symbol nesting among fully annotated trees.
    pub max_symbol_depth: usize,
    /// Largest replica budget of any symbol.
    pub max_replicas: usize,
    /// Largest node set over the corpus.
    pub max_nodes: usize,
}

pub fn corpus_stats(examples: &[PartialExample], vocab: &Vocabulary) -> CorpusStats {
    let mut s = CorpusStats {
        examples: examples.len(),
        ..Default::default()
    };
    for ex in examples {
        *s.modes.entry(ex.tree.mode().tag()).or_default() += 1;
        s.tokens += ex.tokens.len();
        s.max_tokens = s.max_tokens.max(ex.tokens.len());
        if let PartialTree::Full(t) = &ex.tree {
            s.max_symbol_depth = s.max_symbol_depth.max(t.root().symbol_depth());
        }
        s.max_nodes = s.max_nodes.max(build_node_set(&ex.tokens, vocab).len());
    }
    s.intents = vocab.symbols().iter().filter(|l| l.is_intent()).count();
    s.slots = vocab.len() - s.intents;
    s.max_replicas = (0..vocab.len()).map(|i| vocab.replicas(i)).max().unwrap_or(0);
    s
}

impl CorpusStats {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "examples\t{}", self.examples);
        for (mode, n) in &self.modes {
            let _ = writeln!(s, "mode.{mode}\t{n}");
        }
        let mean = if self.examples == 0 {
            "n/a".to_string()
        } else {
            format!("{:.4}", self.tokens as f64 / self.examples as f64)
        };
        let _ = writeln!(s, "mean_tokens\t{mean}");
        let _ = writeln!(s, "max_tokens\t{}", self.max_tokens);
        let _ = writeln!(s, "intents\t{}", self.intents);
        let _ = writeln!(s, "slots\t{}", self.slots);
        let _ = writeln!(s, "max_symbol_depth\t{}", self.max_symbol_depth);
        let _ = writeln!(s, "max_replicas\t{}", self.max_replicas);
        let _ = writeln!(s, "max_nodes\t{}", self.max_nodes);
        s
    }
}
