//! Graph-based decoding for task-oriented semantic parsing.
//!
//! TOP trees ([`top_ir`]) are mapped to dependency parses over a node set of
//! query tokens, replicated output symbols, `Root` and `Unused`
//! ([`symbol_table`], [`mapping`]). A biaffine scorer ([`scorer`]) assigns
//! every edge a score and a constrained arborescence decoder ([`decoder`])
//! picks the parse.

pub mod decoder;
pub mod mapping;
pub mod pipeline;
pub mod scalar;
pub mod scorer;
pub mod symbol_table;
pub mod synth;
pub mod top_ir;

pub use decoder::{decode, decode_with, DecodeError, DecodeOptions, DecodeResult, Diagnostics};
pub use mapping::{parse_to_top, top_to_parse, ParseTree, SupervisionMask};
pub use scalar::{Real, Score};
pub use symbol_table::{build_node_set, NodeSet, Vocabulary};
pub use top_ir::{PartialTree, SupervisionMode, TopTree};

pub type ScoreMatrixF32 = decoder::ScoreMatrix<f32>;
pub type ScoreMatrixF64 = decoder::ScoreMatrix<f64>;
/// Integer scores, used for exact optimality checks.
pub type ScoreMatrixI64 = decoder::ScoreMatrix<i64>;
/// The scorer as trained and checkpointed.
pub type Model = scorer::Model<f32>;
/// Double-precision scorer, used for gradient checks.
pub type Model64 = scorer::Model<f64>;
pub type Params = scorer::Params<f32>;
