//! Core data model for semantic dependency graphs.
//!
//! A [`Sentence`] is a densely numbered token list (positions `1..=n`; position
//! 0 is the implicit ROOT node and never holds a token). A [`SemanticGraph`]
//! pairs a sentence with a set of labelled arcs. Unlike a dependency tree, a
//! token may have any number of heads, including zero; the only structural
//! requirement is acyclicity, which corpus readers enforce and the builder can
//! check via [`SemanticGraph::is_acyclic`].
//!
//! Corpus I/O lives in [`sdp`] (the tab-separated SDP exchange format) and
//! [`jsonl`] (a one-record-per-line internal format). [`synth`] generates
//! random labelled DAG corpora with controllable arc density and singleton
//! share, used for smoke testing and scaling experiments.

mod error;
pub mod jsonl;
pub mod sdp;
pub mod synth;
mod types;

pub use error::GraphError;
pub use types::{Arc, SemanticGraph, Sentence, Token, ROOT_LABEL};
