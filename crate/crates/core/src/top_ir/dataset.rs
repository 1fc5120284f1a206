//! TSV dataset files.
//!
//! Full datasets have three columns: raw query, space-tokenized query and
//! serialized tree. Partial datasets prepend a mode column
//! (`FULL`, `TERM` or `NONTERM`).

use thiserror::Error;

use super::{
    parse_fragments, parse_symbol_tree, parse_top, PartialTree, SupervisionMode, TopError,
    TopTree,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("line {line}: expected {expected} tab-separated columns, found {found}")]
    Columns {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: unknown supervision mode {mode:?}")]
    Mode { line: usize, mode: String },
    #[error("line {line}: empty tokenized query")]
    NoTokens { line: usize },
    #[error("line {line}: {source}")]
    Tree {
        line: usize,
        #[source]
        source: TopError,
    },
}

impl DatasetError {
    pub fn line(&self) -> usize {
        match self {
            DatasetError::Columns { line, .. }
            | DatasetError::Mode { line, .. }
            | DatasetError::NoTokens { line }
            | DatasetError::Tree { line, .. } => *line,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub raw: String,
    pub tokens: Vec<String>,
    pub tree: TopTree,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialExample {
    pub raw: String,
    pub tokens: Vec<String>,
    pub tree: PartialTree,
}

impl From<Example> for PartialExample {
    fn from(ex: Example) -> Self {
        PartialExample {
            raw: ex.raw,
            tokens: ex.tokens,
            tree: PartialTree::Full(ex.tree),
        }
    }
}

fn split_tokens(line: usize, s: &str) -> Result<Vec<String>, DatasetError> {
    let tokens: Vec<String> = s.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(DatasetError::NoTokens { line });
    }
    Ok(tokens)
}

/// Parses one full-dataset line. `line` is 1-based and only used in errors.
pub fn parse_example_line(line: usize, text: &str) -> Result<Example, DatasetError> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() != 3 {
        return Err(DatasetError::Columns {
            line,
            expected: 3,
            found: cols.len(),
        });
    }
    let tokens = split_tokens(line, cols[1])?;
    let tree = parse_top(cols[2], &tokens).map_err(|source| DatasetError::Tree { line, source })?;
    Ok(Example {
        raw: cols[0].to_string(),
        tokens,
        tree,
    })
}

pub fn write_example_line(ex: &Example) -> String {
    format!("{}\t{}\t{}", ex.raw, ex.tokens.join(" "), ex.tree)
}

/// Parses one partial-dataset line. Plain three-column lines are accepted as
/// fully supervised examples.
pub fn parse_partial_line(line: usize, text: &str) -> Result<PartialExample, DatasetError> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() == 3 {
        return parse_example_line(line, text).map(PartialExample::from);
    }
    if cols.len() != 4 {
        return Err(DatasetError::Columns {
            line,
            expected: 4,
            found: cols.len(),
        });
    }
    let mode = SupervisionMode::from_tag(cols[0]).ok_or_else(|| DatasetError::Mode {
        line,
        mode: cols[0].to_string(),
    })?;
    let tokens = split_tokens(line, cols[2])?;
    let tree = match mode {
        SupervisionMode::Full => parse_top(cols[3], &tokens).map(PartialTree::Full),
        SupervisionMode::TerminalOnly => {
            parse_fragments(cols[3], &tokens).map(PartialTree::TerminalOnly)
        }
        SupervisionMode::NonterminalOnly => {
            parse_symbol_tree(cols[3]).map(PartialTree::NonterminalOnly)
        }
    }
    .map_err(|source| DatasetError::Tree { line, source })?;
    Ok(PartialExample {
        raw: cols[1].to_string(),
        tokens,
        tree,
    })
}

pub fn write_partial_line(ex: &PartialExample) -> String {
    format!(
        "{}\t{}\t{}\t{}",
        ex.tree.mode().tag(),
        ex.raw,
        ex.tokens.join(" "),
        ex.tree.serialize()
    )
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Strict reader: the first malformed line is an error.
pub fn read_examples(text: &str) -> Result<Vec<Example>, DatasetError> {
    content_lines(text)
        .map(|(i, l)| parse_example_line(i, l))
        .collect()
}

/// Lenient reader: returns parsed examples with their line numbers, plus
/// every line that failed. Failures are reported, never repaired.
pub fn scan_examples(text: &str) -> (Vec<(usize, Example)>, Vec<DatasetError>) {
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (i, l) in content_lines(text) {
        match parse_example_line(i, l) {
            Ok(ex) => ok.push((i, ex)),
            Err(e) => bad.push(e),
        }
    }
    (ok, bad)
}

pub fn read_partial_examples(text: &str) -> Result<Vec<PartialExample>, DatasetError> {
    content_lines(text)
        .map(|(i, l)| parse_partial_line(i, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn fig1_line() -> String {
        format!("directions to John's party\t{}\t{}", FIG1_TOKENS.join(" "), FIG1)
    }

    #[test]
    fn full_line_round_trip() {
        let ex = parse_example_line(1, &fig1_line()).unwrap();
        assert_eq!(ex.tree, fig1());
        assert_eq!(write_example_line(&ex), fig1_line());
    }

    #[test]
    fn partial_lines_round_trip() {
        let ex = parse_example_line(1, &fig1_line()).unwrap();
        for mode in [
            SupervisionMode::Full,
            SupervisionMode::TerminalOnly,
            SupervisionMode::NonterminalOnly,
        ] {
            let p = PartialExample {
                raw: ex.raw.clone(),
                tokens: ex.tokens.clone(),
                tree: PartialTree::project(&ex.tree, mode),
            };
            let line = write_partial_line(&p);
            assert!(line.starts_with(mode.tag()));
            assert_eq!(parse_partial_line(7, &line).unwrap(), p);
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = format!("{}\n\nbroken line\n{}\n", fig1_line(), fig1_line());
        let err = read_examples(&text).unwrap_err();
        assert_eq!(err.line(), 3);
        let (ok, bad) = scan_examples(&text);
        assert_eq!(ok.iter().map(|(i, _)| *i).collect::<Vec<_>>(), [1, 4]);
        assert_eq!(bad.len(), 1);
    }

    #[test]
    fn unknown_mode_and_bad_tree() {
        assert!(matches!(
            parse_partial_line(2, "HALF\tq\tq\t[IN:X q ]"),
            Err(DatasetError::Mode { line: 2, .. })
        ));
        assert!(matches!(
            parse_example_line(5, "q\tq\t[IN:X [IN:Y q ] ]"),
            Err(DatasetError::Tree {
                line: 5,
                source: TopError::IllegalNesting { .. }
            })
        ));
        assert!(matches!(
            parse_example_line(1, "q\t \t[IN:X q ]"),
            Err(DatasetError::NoTokens { .. })
        ));
    }
}
