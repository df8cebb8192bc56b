//! Transition system for building semantic dependency graphs left to right.
//!
//! A [`Configuration`] keeps a focus pointer `i` over the sentence. Two
//! transition kinds drive parsing:
//!
//! - `Attach(p, label)` adds the arc `p -> i` (p may be 0 for ROOT) and keeps
//!   the focus in place, so a token can collect any number of heads;
//! - `Shift` moves the focus one token to the right.
//!
//! Parsing starts at focus 1 and terminates when the focus passes the last
//! token. Every complete run therefore uses exactly n Shift transitions plus
//! one Attach per arc. Attach legality bars self-loops, duplicate arcs, and,
//! via an incremental [`CycleGuard`], anything that would close a cycle, so
//! every reachable configuration holds a DAG.
//!
//! [`oracle`] maps a gold graph to its canonical transition sequence (for each
//! focus token, attach all its heads in ascending head position, then shift);
//! [`replay`] runs a sequence back into a graph and validates every step.

mod serial;

pub use serial::{parse_sequence, read_sequences, write_sequences, SerialError};

use cycle_detect::CycleGuard;
use graph_core::{Arc, GraphError, SemanticGraph, Sentence};
use thiserror::Error;

/// A single parser action.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Transition {
    Shift,
    Attach { head: usize, label: String },
}

impl Transition {
    pub fn attach(head: usize, label: impl Into<String>) -> Self {
        Transition::Attach {
            head,
            label: label.into(),
        }
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Transition::Shift => write!(f, "SHIFT"),
            Transition::Attach { head, label } => write!(f, "ATTACH {head} {label}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum TransitionError {
    #[error("no transition is legal in a terminal configuration")]
    Terminal,

    #[error("attach {head} -> {focus} is illegal: {reason}")]
    IllegalAttach {
        head: usize,
        focus: usize,
        reason: &'static str,
    },

    #[error("attach rejected by graph: {0}")]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("step {step}: {source}")]
    Step {
        step: usize,
        source: TransitionError,
    },

    #[error("sequence ended at focus {focus} of {n}; parse incomplete")]
    Incomplete { focus: usize, n: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("gold graph is cyclic; no transition sequence can build it")]
    Cyclic,
}

/// Parser state: the sentence, the focus pointer, the graph built so far, and
/// the cycle guard that mirrors its arcs.
#[derive(Debug, Clone)]
pub struct Configuration {
    focus: usize,
    built: SemanticGraph,
    guard: CycleGuard,
    last_attach: Option<usize>,
}

impl Configuration {
    /// Initial configuration: focus on the first token, empty graph.
    pub fn initial(sentence: Sentence) -> Self {
        let guard = CycleGuard::new(sentence.len() + 1);
        Configuration {
            focus: 1,
            built: SemanticGraph::new(sentence),
            guard,
            last_attach: None,
        }
    }

    pub fn focus(&self) -> usize {
        self.focus
    }

    pub fn sentence(&self) -> &Sentence {
        self.built.sentence()
    }

    pub fn graph(&self) -> &SemanticGraph {
        &self.built
    }

    pub fn into_graph(self) -> SemanticGraph {
        self.built
    }

    /// Terminal once the focus has moved past the last token.
    pub fn is_terminal(&self) -> bool {
        self.focus > self.built.n()
    }

    /// Head of the most recent Attach for the current focus token. Cleared by
    /// Shift: a fresh focus token has no attachment history yet.
    pub fn last_attached_head(&self) -> Option<usize> {
        self.last_attach
    }

    /// Structural legality. Shift is legal in every non-terminal
    /// configuration; Attach additionally needs a fresh, in-range,
    /// non-self, non-cycle-closing head. Labels do not affect legality
    /// except that ROOT's reserved label is fixed (checked on apply).
    pub fn is_legal(&self, transition: &Transition) -> bool {
        if self.is_terminal() {
            return false;
        }
        match transition {
            Transition::Shift => true,
            Transition::Attach { head, .. } => {
                let n = self.built.n();
                *head <= n
                    && *head != self.focus
                    && !self.built.contains_arc(*head, self.focus)
                    && !self.guard.would_create_cycle(*head, self.focus)
            }
        }
    }

    /// Applies a transition in place. Illegal transitions leave the
    /// configuration unchanged and report why they were rejected.
    pub fn apply(&mut self, transition: &Transition) -> Result<(), TransitionError> {
        if self.is_terminal() {
            return Err(TransitionError::Terminal);
        }
        match transition {
            Transition::Shift => {
                self.focus += 1;
                self.last_attach = None;
                Ok(())
            }
            Transition::Attach { head, label } => {
                let n = self.built.n();
                let reason = if *head > n {
                    Some("head out of range")
                } else if *head == self.focus {
                    Some("head equals focus")
                } else if self.built.contains_arc(*head, self.focus) {
                    Some("arc already present")
                } else if self.guard.would_create_cycle(*head, self.focus) {
                    Some("would close a cycle")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(TransitionError::IllegalAttach {
                        head: *head,
                        focus: self.focus,
                        reason,
                    });
                }
                // Validates the label side (reserved ROOT label) before any
                // mutation, keeping graph and guard in lockstep.
                let arc = Arc::new(*head, self.focus, label.clone())?;
                self.built.add_arc(arc)?;
                self.guard
                    .insert_arc(*head, self.focus)
                    .expect("legality already ruled out a cycle");
                self.last_attach = Some(*head);
                Ok(())
            }
        }
    }
}

/// Canonical transition sequence for a gold graph: for each token left to
/// right, one Attach per head in ascending head position, then Shift. The
/// sequence length is always n + (number of arcs).
pub fn oracle(gold: &SemanticGraph) -> Result<Vec<Transition>, OracleError> {
    if !gold.is_acyclic() {
        return Err(OracleError::Cyclic);
    }
    let n = gold.n();
    let mut sequence = Vec::with_capacity(n + gold.arc_count());
    for focus in 1..=n {
        for head in gold.heads_of(focus) {
            let label = gold
                .label(head, focus)
                .expect("head came from the arc map")
                .to_string();
            sequence.push(Transition::Attach { head, label });
        }
        sequence.push(Transition::Shift);
    }
    Ok(sequence)
}

/// Runs a transition sequence from the initial configuration and returns the
/// resulting graph. The sequence must be legal at every step and leave the
/// configuration terminal.
pub fn replay(sentence: Sentence, sequence: &[Transition]) -> Result<SemanticGraph, ReplayError> {
    let mut config = Configuration::initial(sentence);
    for (step, transition) in sequence.iter().enumerate() {
        config
            .apply(transition)
            .map_err(|source| ReplayError::Step { step, source })?;
    }
    if !config.is_terminal() {
        return Err(ReplayError::Incomplete {
            focus: config.focus(),
            n: config.graph().n(),
        });
    }
    Ok(config.into_graph())
}
