//! Arc-level evaluation: labelled and unlabelled precision, recall, and F1.
//!
//! An unlabelled match is a (head, dependent) pair present in both the
//! predicted and gold graphs; a labelled match also requires the same label.
//! Arcs from ROOT participate like any other arc. All ratios fall back to 0
//! when their denominator is 0 (no arcs predicted, or none in the gold).

use graph_core::SemanticGraph;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("corpus size mismatch: {predicted} predicted vs {gold} gold sentences")]
    CorpusSize { predicted: usize, gold: usize },

    #[error("sentence {index}: predicted and gold graphs are over different sentences")]
    SentenceMismatch { index: usize },

    #[error("macro average of an empty score list")]
    Empty,
}

/// Raw match counts, summed over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub labelled_matches: usize,
    pub unlabelled_matches: usize,
    pub predicted_arcs: usize,
    pub gold_arcs: usize,
}

impl EvalCounts {
    pub fn add(&mut self, other: &EvalCounts) {
        self.labelled_matches += other.labelled_matches;
        self.unlabelled_matches += other.unlabelled_matches;
        self.predicted_arcs += other.predicted_arcs;
        self.gold_arcs += other.gold_arcs;
    }
}

/// The six standard scores of one evaluation, as fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub counts: EvalCounts,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl Evaluation {
    pub fn unlabelled_precision(&self) -> f64 {
        ratio(self.counts.unlabelled_matches, self.counts.predicted_arcs)
    }

    pub fn unlabelled_recall(&self) -> f64 {
        ratio(self.counts.unlabelled_matches, self.counts.gold_arcs)
    }

    pub fn unlabelled_f1(&self) -> f64 {
        f1(self.unlabelled_precision(), self.unlabelled_recall())
    }

    pub fn labelled_precision(&self) -> f64 {
        ratio(self.counts.labelled_matches, self.counts.predicted_arcs)
    }

    pub fn labelled_recall(&self) -> f64 {
        ratio(self.counts.labelled_matches, self.counts.gold_arcs)
    }

    pub fn labelled_f1(&self) -> f64 {
        f1(self.labelled_precision(), self.labelled_recall())
    }

    /// Fixed-order report: UP UR UF1 LP LR LF1, one header line and one row
    /// of percentages with one decimal place.
    pub fn format_table(&self) -> String {
        format!(
            "UP\tUR\tUF1\tLP\tLR\tLF1\n{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\t{:.1}\n",
            100.0 * self.unlabelled_precision(),
            100.0 * self.unlabelled_recall(),
            100.0 * self.unlabelled_f1(),
            100.0 * self.labelled_precision(),
            100.0 * self.labelled_recall(),
            100.0 * self.labelled_f1(),
        )
    }
}

/// Counts matches for one sentence pair. The two graphs must be over the same
/// sentence; the caller checks that (or uses [`evaluate`]).
pub fn count_sentence(predicted: &SemanticGraph, gold: &SemanticGraph) -> EvalCounts {
    let mut counts = EvalCounts {
        predicted_arcs: predicted.arc_count(),
        gold_arcs: gold.arc_count(),
        ..EvalCounts::default()
    };
    for (head, dependent, label) in predicted.arcs() {
        match gold.label(head, dependent) {
            Some(gold_label) => {
                counts.unlabelled_matches += 1;
                if gold_label == label {
                    counts.labelled_matches += 1;
                }
            }
            None => {}
        }
    }
    counts
}

/// Corpus-level evaluation over aligned graph lists.
pub fn evaluate(
    predicted: &[SemanticGraph],
    gold: &[SemanticGraph],
) -> Result<Evaluation, EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::CorpusSize {
            predicted: predicted.len(),
            gold: gold.len(),
        });
    }
    let mut counts = EvalCounts::default();
    for (index, (p, g)) in predicted.iter().zip(gold).enumerate() {
        let forms_match = p.n() == g.n()
            && p.sentence()
                .tokens()
                .iter()
                .zip(g.sentence().tokens())
                .all(|(a, b)| a.form() == b.form());
        if !forms_match {
            return Err(EvalError::SentenceMismatch { index });
        }
        counts.add(&count_sentence(p, g));
    }
    Ok(Evaluation { counts })
}

/// Arithmetic mean of a non-empty score list.
pub fn macro_average(scores: &[f64]) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
