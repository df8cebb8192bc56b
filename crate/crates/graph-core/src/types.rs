use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::GraphError;

/// Reserved label for arcs whose head is the ROOT node (position 0).
///
/// [`SemanticGraph::add_arc`] enforces the reservation in both directions:
/// head-0 arcs must carry it, and no other arc may.
pub const ROOT_LABEL: &str = "ROOT";

/// One word of a sentence. Positions start at 1; 0 is the implicit ROOT.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    position: usize,
    form: String,
    lemma: String,
    pos: String,
    frame: String,
}

impl Token {
    pub fn new(
        position: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        pos: impl Into<String>,
    ) -> Result<Self, GraphError> {
        Self::with_frame(position, form, lemma, pos, "_")
    }

    pub fn with_frame(
        position: usize,
        form: impl Into<String>,
        lemma: impl Into<String>,
        pos: impl Into<String>,
        frame: impl Into<String>,
    ) -> Result<Self, GraphError> {
        if position == 0 {
            return Err(GraphError::InvalidPosition { position });
        }
        let form = form.into();
        if form.is_empty() {
            return Err(GraphError::EmptyForm { position });
        }
        Ok(Token {
            position,
            form,
            lemma: lemma.into(),
            pos: pos.into(),
            frame: frame.into(),
        })
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn form(&self) -> &str {
        &self.form
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn pos(&self) -> &str {
        &self.pos
    }

    /// Sense/frame annotation, carried through I/O untouched.
    pub fn frame(&self) -> &str {
        &self.frame
    }

    /// Character sequence of the surface form.
    pub fn characters(&self) -> impl Iterator<Item = char> + '_ {
        self.form.chars()
    }
}

/// A token list with dense positions `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<Token>,
}

impl Sentence {
    /// Validates that token `k` (0-based) sits at position `k + 1`.
    pub fn new(tokens: Vec<Token>) -> Result<Self, GraphError> {
        for (index, token) in tokens.iter().enumerate() {
            let expected = index + 1;
            if token.position != expected {
                return Err(GraphError::NonDensePositions {
                    index,
                    expected,
                    found: token.position,
                });
            }
        }
        Ok(Sentence { tokens })
    }

    /// Builds a sentence from `(form, lemma, pos)` triples, assigning positions.
    pub fn from_triples(triples: &[(&str, &str, &str)]) -> Result<Self, GraphError> {
        let tokens = triples
            .iter()
            .enumerate()
            .map(|(i, (form, lemma, pos))| Token::new(i + 1, *form, *lemma, *pos))
            .collect::<Result<Vec<_>, _>>()?;
        Sentence::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token at `position` (1-based). Panics if out of range.
    pub fn token(&self, position: usize) -> &Token {
        &self.tokens[position - 1]
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

/// A labelled head-to-dependent arc. The head may be 0 (ROOT); the dependent
/// may not, and self-loops are rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arc {
    head: usize,
    dependent: usize,
    label: String,
}

impl Arc {
    pub fn new(
        head: usize,
        dependent: usize,
        label: impl Into<String>,
    ) -> Result<Self, GraphError> {
        if dependent == 0 {
            return Err(GraphError::DependentIsRoot);
        }
        if head == dependent {
            return Err(GraphError::SelfLoop { position: head });
        }
        Ok(Arc {
            head,
            dependent,
            label: label.into(),
        })
    }

    pub fn head(&self) -> usize {
        self.head
    }

    pub fn dependent(&self) -> usize {
        self.dependent
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// A sentence plus a set of labelled arcs over it.
///
/// At most one arc per (head, dependent) pair. Acyclicity is not enforced on
/// every insertion (the transition layer guards that incrementally); readers
/// and [`SemanticGraph::from_arcs`] check it once per graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticGraph {
    sentence: Sentence,
    // Keyed (dependent, head) so the heads of a token enumerate in ascending
    // head order, which both the oracle and the SDP writer rely on.
    arcs: BTreeMap<(usize, usize), String>,
}

impl SemanticGraph {
    pub fn new(sentence: Sentence) -> Self {
        SemanticGraph {
            sentence,
            arcs: BTreeMap::new(),
        }
    }

    /// Builds a graph from a full arc set, validating acyclicity.
    pub fn from_arcs(sentence: Sentence, arcs: Vec<Arc>) -> Result<Self, GraphError> {
        let mut graph = SemanticGraph::new(sentence);
        for arc in arcs {
            graph.add_arc(arc)?;
        }
        if !graph.is_acyclic() {
            return Err(GraphError::Cyclic);
        }
        Ok(graph)
    }

    pub fn sentence(&self) -> &Sentence {
        &self.sentence
    }

    /// Sentence length n.
    pub fn n(&self) -> usize {
        self.sentence.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Inserts an arc. Rejects out-of-range endpoints, duplicates, and misuse
    /// of the reserved ROOT label.
    pub fn add_arc(&mut self, arc: Arc) -> Result<(), GraphError> {
        let n = self.n();
        if arc.head > n {
            return Err(GraphError::HeadOutOfRange { head: arc.head, n });
        }
        if arc.dependent > n {
            return Err(GraphError::DependentOutOfRange {
                dependent: arc.dependent,
                n,
            });
        }
        if arc.head == 0 && arc.label != ROOT_LABEL {
            return Err(GraphError::RootArcLabel {
                dependent: arc.dependent,
                label: arc.label,
            });
        }
        if arc.head != 0 && arc.label == ROOT_LABEL {
            return Err(GraphError::ReservedLabel { label: arc.label });
        }
        let key = (arc.dependent, arc.head);
        if self.arcs.contains_key(&key) {
            return Err(GraphError::DuplicateArc {
                head: arc.head,
                dependent: arc.dependent,
            });
        }
        self.arcs.insert(key, arc.label);
        Ok(())
    }

    pub fn contains_arc(&self, head: usize, dependent: usize) -> bool {
        self.arcs.contains_key(&(dependent, head))
    }

    pub fn label(&self, head: usize, dependent: usize) -> Option<&str> {
        self.arcs.get(&(dependent, head)).map(String::as_str)
    }

    /// All arcs as `(head, dependent, label)`, ordered by dependent then head.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, &str)> {
        self.arcs
            .iter()
            .map(|(&(dependent, head), label)| (head, dependent, label.as_str()))
    }

    /// Heads of `dependent` in ascending order (0 first when present).
    pub fn heads_of(&self, dependent: usize) -> impl Iterator<Item = usize> + '_ {
        self.arcs
            .range((dependent, 0)..(dependent + 1, 0))
            .map(|(&(_, head), _)| head)
    }

    /// Dependents of `head` in ascending order.
    pub fn dependents_of(&self, head: usize) -> Vec<usize> {
        let mut deps: Vec<usize> = self
            .arcs
            .keys()
            .filter(|&&(_, h)| h == head)
            .map(|&(d, _)| d)
            .collect();
        deps.sort_unstable();
        deps
    }

    /// True when the token has neither incoming nor outgoing arcs.
    /// An arc from ROOT counts as incoming.
    pub fn is_singleton(&self, position: usize) -> bool {
        !self
            .arcs
            .keys()
            .any(|&(d, h)| d == position || h == position)
    }

    pub fn singleton_count(&self) -> usize {
        (1..=self.n()).filter(|&p| self.is_singleton(p)).count()
    }

    /// Kahn's algorithm over nodes `0..=n`.
    pub fn is_acyclic(&self) -> bool {
        let n = self.n();
        let mut indegree = vec![0usize; n + 1];
        let mut out = vec![Vec::new(); n + 1];
        for (&(dependent, head), _) in &self.arcs {
            indegree[dependent] += 1;
            out[head].push(dependent);
        }
        let mut queue: Vec<usize> = (0..=n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    queue.push(w);
                }
            }
        }
        seen == n + 1
    }
}
