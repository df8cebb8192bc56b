//! Precomputed per-token vectors supplied from outside, e.g. contextual
//! embeddings dumped by another tool. One whitespace-separated vector per
//! line, one line per token, blank line between sentences.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::ScorerError;

/// Per-sentence, per-token vectors. Outer index parallels a corpus.
pub type ExternalEmbeddings = Vec<Vec<Vec<f64>>>;

pub fn read_external_embeddings<R: BufRead>(reader: R) -> Result<ExternalEmbeddings, ScorerError> {
    let mut sentences = Vec::new();
    let mut current: Vec<Vec<f64>> = Vec::new();
    let mut dim: Option<usize> = None;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let vector: Vec<f64> = line
            .split_whitespace()
            .map(|field| {
                field.parse::<f64>().map_err(|_| {
                    ScorerError::External(format!("line {number}: bad float {field:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(ScorerError::External(format!(
                    "line {number}: dimension {} does not match earlier {d}",
                    vector.len()
                )));
            }
            Some(_) => {}
        }
        current.push(vector);
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

pub fn load_external_embeddings(path: &Path) -> Result<ExternalEmbeddings, ScorerError> {
    read_external_embeddings(BufReader::new(File::open(path)?))
}

/// Checks the embeddings line up with a corpus: same sentence count, same
/// token counts, and the advertised dimension.
pub fn validate_external(
    embeddings: &ExternalEmbeddings,
    token_counts: &[usize],
    dim: usize,
) -> Result<(), ScorerError> {
    if embeddings.len() != token_counts.len() {
        return Err(ScorerError::External(format!(
            "{} embedded sentences but {} corpus sentences",
            embeddings.len(),
            token_counts.len()
        )));
    }
    for (index, (vectors, &tokens)) in embeddings.iter().zip(token_counts).enumerate() {
        if vectors.len() != tokens {
            return Err(ScorerError::External(format!(
                "sentence {}: {} vectors for {} tokens",
                index + 1,
                vectors.len(),
                tokens
            )));
        }
        for v in vectors {
            if v.len() != dim {
                return Err(ScorerError::External(format!(
                    "sentence {}: vector of width {} where config expects {}",
                    index + 1,
                    v.len(),
                    dim
                )));
            }
        }
    }
    Ok(())
}
