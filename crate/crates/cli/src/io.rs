//! File helpers and the error type that decides the exit code.

use std::fs;
use std::path::Path;

use thiserror::Error;
use topgraph::decoder::DecodeError;
use topgraph::scorer::{load_checkpoint, ScorerError};
use topgraph::symbol_table::Vocabulary;
use topgraph::Model;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ScorerError> for CliError {
    fn from(e: ScorerError) -> Self {
        match e {
            ScorerError::Config(_) => CliError::Usage(e.to_string()),
            ScorerError::NonFiniteLoss { .. }
            | ScorerError::Decode(DecodeError::NonFiniteScore { .. }) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<DecodeError> for CliError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::NonFiniteScore { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_or_print(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

pub fn load_model(path: &Path) -> Result<Model, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(load_checkpoint(&bytes)?)
}

pub fn load_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    Vocabulary::from_text(&read(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Tokenized queries with their 1-based line numbers. Dataset lines
/// contribute their tokenized column; other lines are taken whole.
pub fn read_queries(text: &str) -> Vec<(usize, Vec<String>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.trim_end_matches('\r').split('\t').collect();
            let tokens = match cols.len() {
                1 => cols[0],
                4 => cols[2],
                _ => cols[1],
            };
            (i + 1, tokens.split_whitespace().map(str::to_string).collect())
        })
        .collect()
}
