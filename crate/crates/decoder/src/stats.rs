//! Transition counts per sentence and the least-squares line through them.

use graph_core::SemanticGraph;
use transitions::{oracle, OracleError};

/// Transition count for one sentence, keyed by corpus position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceStat {
    pub index: usize,
    pub tokens: usize,
    pub transitions: usize,
}

/// Least-squares line through (tokens, transitions) points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Oracle transition counts: one Shift per token plus one Attach per arc.
pub fn oracle_stats(corpus: &[SemanticGraph]) -> Result<Vec<SentenceStat>, OracleError> {
    corpus
        .iter()
        .enumerate()
        .map(|(index, graph)| {
            Ok(SentenceStat {
                index,
                tokens: graph.n(),
                transitions: oracle(graph)?.len(),
            })
        })
        .collect()
}

/// Fits y = slope * x + intercept. None with fewer than two points or when
/// the x values do not vary. A corpus with constant y fits its own mean, so
/// r_squared is 1 by convention when the total sum of squares vanishes.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let len = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / len;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
