//! Bracketed serialization: `[IN:NAME tok [SL:NAME tok ] ]`.
//!
//! Parsing splits on any whitespace; emission always uses single spaces with
//! a space before every closing bracket.

use super::{Fragment, SymbolLabel, SymbolTree, TokenRef, TopError, TopNode, TopTree};

enum Raw {
    Symbol(SymbolLabel, Vec<Raw>),
    Word(String),
}

/// Parses a sequence of bracketed nodes and bare words at the top level.
fn parse_forest(serialized: &str) -> Result<Vec<Raw>, TopError> {
    let mut stack: Vec<(SymbolLabel, Vec<Raw>)> = Vec::new();
    let mut top = Vec::new();
    for item in serialized.split_whitespace() {
        if let Some(name) = item.strip_prefix('[') {
            stack.push((SymbolLabel::new(name)?, Vec::new()));
        } else if item == "]" {
            let (label, children) = stack.pop().ok_or(TopError::UnbalancedBrackets)?;
            let node = Raw::Symbol(label, children);
            match stack.last_mut() {
                Some((_, siblings)) => siblings.push(node),
                None => top.push(node),
            }
        } else if item.contains('[') || item.contains(']') {
            return Err(TopError::UnbalancedBrackets);
        } else {
            let word = Raw::Word(item.to_string());
            match stack.last_mut() {
                Some((_, siblings)) => siblings.push(word),
                None => top.push(word),
            }
        }
    }
    if !stack.is_empty() {
        return Err(TopError::UnbalancedBrackets);
    }
    Ok(top)
}

fn single_root(mut forest: Vec<Raw>) -> Result<Raw, TopError> {
    match forest.len() {
        0 => Err(TopError::EmptyTree),
        1 => Ok(forest.pop().unwrap()),
        // Two top-level items means the outer bracket closed early.
        _ => Err(TopError::UnbalancedBrackets),
    }
}

/// Converts raw words to positioned tokens, checking them against `tokens`.
fn attach(raw: Raw, tokens: &[impl AsRef<str>], next: &mut usize) -> Result<TopNode, TopError> {
    match raw {
        Raw::Word(w) => {
            let position = *next;
            match tokens.get(position) {
                Some(t) if t.as_ref() == w => {
                    *next += 1;
                    Ok(TopNode::Token(TokenRef::new(position, w)))
                }
                other => Err(TopError::TokenMismatch {
                    position,
                    expected: other.map(|t| t.as_ref().to_string()),
                    found: Some(w),
                }),
            }
        }
        Raw::Symbol(label, children) => {
            let children = children
                .into_iter()
                .map(|c| attach(c, tokens, next))
                .collect::<Result<_, _>>()?;
            Ok(TopNode::Symbol { label, children })
        }
    }
}

/// Parses a serialized TOP tree whose leaves must spell out `tokens`.
pub fn parse_top(serialized: &str, tokens: &[impl AsRef<str>]) -> Result<TopTree, TopError> {
    let raw = single_root(parse_forest(serialized)?)?;
    if let Raw::Word(w) = &raw {
        return Err(TopError::UnexpectedToken(w.clone()));
    }
    let mut next = 0;
    let root = attach(raw, tokens, &mut next)?;
    if next != tokens.len() {
        return Err(TopError::TokenMismatch {
            position: next,
            expected: Some(tokens[next].as_ref().to_string()),
            found: None,
        });
    }
    TopTree::new(root)
}

/// Parses a token-free symbol tree such as `[IN:A [SL:B ] ]`.
pub fn parse_symbol_tree(serialized: &str) -> Result<SymbolTree, TopError> {
    let raw = single_root(parse_forest(serialized)?)?;
    let root = attach(raw, &[] as &[&str], &mut 0).map_err(|e| match e {
        TopError::TokenMismatch { found: Some(w), .. } => TopError::UnexpectedToken(w),
        e => e,
    })?;
    SymbolTree::new(root)
}

/// Parses `" | "`-separated fragments, each a symbol over its direct tokens.
///
/// Tokens inside fragments carry no positions, so they are matched against
/// `tokens` under three constraints: fragments appear in order of their first
/// token, tokens within a fragment are increasing, and every query token is
/// covered exactly once. The lexicographically first consistent assignment
/// is returned.
pub fn parse_fragments(
    serialized: &str,
    tokens: &[impl AsRef<str>],
) -> Result<Vec<Fragment>, TopError> {
    let mut frags: Vec<(SymbolLabel, Vec<String>)> = Vec::new();
    if serialized.trim().is_empty() && tokens.is_empty() {
        return Ok(Vec::new());
    }
    for part in serialized.split('|') {
        match single_root(parse_forest(part)?)? {
            Raw::Word(w) => return Err(TopError::UnexpectedToken(w)),
            Raw::Symbol(label, children) => {
                let mut words = Vec::with_capacity(children.len());
                for child in children {
                    match child {
                        Raw::Word(w) => words.push(w),
                        Raw::Symbol(inner, _) => {
                            return Err(TopError::IllegalNesting {
                                parent: label.name().to_string(),
                                child: inner.name().to_string(),
                            })
                        }
                    }
                }
                if words.is_empty() {
                    return Err(TopError::EmptyTree);
                }
                frags.push((label, words));
            }
        }
    }
    let total: usize = frags.iter().map(|(_, w)| w.len()).sum();
    if total != tokens.len() {
        return Err(TopError::TokenMismatch {
            position: total.min(tokens.len()),
            expected: tokens.get(total).map(|t| t.as_ref().to_string()),
            found: None,
        });
    }
    let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let words: Vec<Vec<&str>> = frags
        .iter()
        .map(|(_, w)| w.iter().map(String::as_str).collect())
        .collect();
    let mut assignment: Vec<Vec<usize>> = words.iter().map(|w| Vec::with_capacity(w.len())).collect();
    let mut used = vec![false; tokens.len()];
    if !assign_fragments(&words, &tokens, 0, 0, None, &mut used, &mut assignment) {
        return Err(TopError::TokenMismatch {
            position: 0,
            expected: tokens.first().map(|t| t.to_string()),
            found: None,
        });
    }
    Ok(frags
        .into_iter()
        .zip(assignment)
        .map(|((label, w), positions)| Fragment {
            label,
            tokens: positions
                .into_iter()
                .zip(w)
                .map(|(p, text)| TokenRef::new(p, text))
                .collect(),
        })
        .collect())
}

fn assign_fragments(
    words: &[Vec<&str>],
    tokens: &[&str],
    frag: usize,
    word: usize,
    prev_first: Option<usize>,
    used: &mut [bool],
    out: &mut [Vec<usize>],
) -> bool {
    if frag == words.len() {
        return used.iter().all(|&u| u);
    }
    if word == words[frag].len() {
        let first = out[frag][0];
        return assign_fragments(words, tokens, frag + 1, 0, Some(first), used, out);
    }
    if word == 0 {
        // Every position left of a fragment's first token must already be
        // covered, so the first token is the leftmost uncovered one.
        let Some(pos) = used.iter().position(|&u| !u) else {
            return false;
        };
        if prev_first.is_some_and(|p| pos <= p) || tokens[pos] != words[frag][0] {
            return false;
        }
        used[pos] = true;
        out[frag].push(pos);
        if assign_fragments(words, tokens, frag, 1, prev_first, used, out) {
            return true;
        }
        out[frag].pop();
        used[pos] = false;
        return false;
    }
    for pos in out[frag][word - 1] + 1..tokens.len() {
        if used[pos] || tokens[pos] != words[frag][word] {
            continue;
        }
        used[pos] = true;
        out[frag].push(pos);
        if assign_fragments(words, tokens, frag, word + 1, prev_first, used, out) {
            return true;
        }
        out[frag].pop();
        used[pos] = false;
    }
    false
}

/// Byte-exact emission of any node.
pub fn serialize_node(node: &TopNode) -> String {
    let mut out = String::new();
    write_node(node, &mut out);
    out
}

fn write_node(node: &TopNode, out: &mut String) {
    match node {
        TopNode::Token(t) => out.push_str(&t.text),
        TopNode::Symbol { label, children } => {
            out.push('[');
            out.push_str(label.name());
            for child in children {
                out.push(' ');
                write_node(child, out);
            }
            out.push_str(" ]");
        }
    }
}

pub fn serialize_top(tree: &TopTree) -> String {
    serialize_node(tree.root())
}

pub fn serialize_fragments(frags: &[Fragment]) -> String {
    frags
        .iter()
        .map(|f| {
            let mut s = format!("[{}", f.label.name());
            for t in &f.tokens {
                s.push(' ');
                s.push_str(&t.text);
            }
            s.push_str(" ]");
            s
        })
        .collect::<Vec<_>>()
        .join(" | ")
}
