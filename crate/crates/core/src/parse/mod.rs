//! Batch parsers over the shared grammar types.

mod shift_reduce;
mod viterbi;

pub use shift_reduce::{sr_parse, SrAction, SrOutcome, SrTraceStep};
pub use viterbi::{tree_probability, viterbi_parse, ProbabilisticParser, ScoredTree, ViterbiParser};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("cyclic unary productions: {}", .0.join(" -> "))]
    CyclicUnary(Vec<String>),
    #[error("no production matches the local tree at {0}")]
    UnknownProduction(String),
}
