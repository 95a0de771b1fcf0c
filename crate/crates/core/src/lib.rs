//! A teaching-oriented natural language processing toolkit.
//!
//! Each module covers one task with small, inspectable data structures:
//! tokens and trees ([`text`]), frequency and probability distributions
//! ([`probability`]), grammars ([`grammar`]), step-by-step chart parsing
//! ([`chart`]), shift-reduce and probabilistic parsing ([`parse`]),
//! regular-expression chunking ([`chunk`]), tagging ([`tag`]), finite-state
//! automata ([`fsa`]) and text classification ([`classify`]).

pub mod chart;
pub mod chunk;
pub mod classify;
pub mod fsa;
pub mod grammar;
pub mod parse;
pub mod probability;
pub mod tag;
pub mod text;
