//! Reader and writer for the tab-separated SDP exchange format.
//!
//! One token per line, sentences separated by blank lines, `#` lines are
//! comments. Columns: id, form, lemma, pos, top flag (`+`/`-`), predicate flag
//! (`+`/`-`), frame, then one argument column per predicate-flagged token of
//! the sentence, in token order. A cell in argument column k holds the label
//! of the arc from the k-th predicate to this token, or `_` for no arc. A `+`
//! top flag becomes an arc from ROOT with the reserved label.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use thiserror::Error;

use crate::{Arc, GraphError, SemanticGraph, Sentence, Token, ROOT_LABEL};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: expected at least 7 tab-separated columns, got {found}")]
    ColumnCount { line: usize, found: usize },

    #[error("line {line}: sentence has {predicates} predicates, so rows need {expected} columns, got {found}")]
    ArgColumnMismatch {
        line: usize,
        predicates: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid token id {value:?}")]
    BadId { line: usize, value: String },

    #[error("line {line}: token ids must be dense, expected {expected}, got {found}")]
    NonDenseId {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: flag column must be '+' or '-', got {value:?}")]
    BadFlag { line: usize, value: String },

    #[error("line {line}: empty argument cell (use '_' for no arc)")]
    EmptyCell { line: usize },

    #[error("line {line}: token is an argument of itself")]
    SelfArc { line: usize },

    #[error("sentence starting at line {line}: arcs form a cycle")]
    CyclicGraph { line: usize },

    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

pub fn read_sdp_file(path: impl AsRef<Path>) -> Result<Vec<SemanticGraph>, SdpError> {
    read_sdp_corpus(BufReader::new(File::open(path)?))
}

pub fn read_sdp_corpus<R: BufRead>(reader: R) -> Result<Vec<SemanticGraph>, SdpError> {
    let mut graphs = Vec::new();
    let mut block: Vec<(usize, String)> = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line).to_string();
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            if !block.is_empty() {
                graphs.push(parse_block(&block)?);
                block.clear();
            }
            continue;
        }
        block.push((line_no, line));
    }
    if !block.is_empty() {
        graphs.push(parse_block(&block)?);
    }
    Ok(graphs)
}

struct Row<'a> {
    line: usize,
    form: &'a str,
    lemma: &'a str,
    pos: &'a str,
    top: bool,
    pred: bool,
    frame: &'a str,
    args: Vec<&'a str>,
}

fn parse_flag(line: usize, value: &str) -> Result<bool, SdpError> {
    match value {
        "+" => Ok(true),
        "-" => Ok(false),
        other => Err(SdpError::BadFlag {
            line,
            value: other.to_string(),
        }),
    }
}

fn parse_block(block: &[(usize, String)]) -> Result<SemanticGraph, SdpError> {
    let first_line = block[0].0;
    let mut rows = Vec::with_capacity(block.len());
    for (expected_id, (line, text)) in block.iter().enumerate() {
        let line = *line;
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() < 7 {
            return Err(SdpError::ColumnCount {
                line,
                found: cols.len(),
            });
        }
        let id: usize = cols[0].parse().map_err(|_| SdpError::BadId {
            line,
            value: cols[0].to_string(),
        })?;
        if id != expected_id + 1 {
            return Err(SdpError::NonDenseId {
                line,
                expected: expected_id + 1,
                found: id,
            });
        }
        rows.push(Row {
            line,
            form: cols[1],
            lemma: cols[2],
            pos: cols[3],
            top: parse_flag(line, cols[4])?,
            pred: parse_flag(line, cols[5])?,
            frame: cols[6],
            args: cols[7..].to_vec(),
        });
    }

    let predicates: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.pred)
        .map(|(i, _)| i + 1)
        .collect();
    let expected_cols = 7 + predicates.len();
    for row in &rows {
        if row.args.len() != predicates.len() {
            return Err(SdpError::ArgColumnMismatch {
                line: row.line,
                predicates: predicates.len(),
                expected: expected_cols,
                found: row.args.len() + 7,
            });
        }
    }

    let tokens = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Token::with_frame(i + 1, r.form, r.lemma, r.pos, r.frame).map_err(|source| {
                SdpError::Graph {
                    line: r.line,
                    source,
                }
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let sentence = Sentence::new(tokens).map_err(|source| SdpError::Graph {
        line: first_line,
        source,
    })?;
    let mut graph = SemanticGraph::new(sentence);

    for (i, row) in rows.iter().enumerate() {
        let dependent = i + 1;
        let line = row.line;
        if row.top {
            let arc = Arc::new(0, dependent, ROOT_LABEL).expect("root arc is well-formed");
            graph
                .add_arc(arc)
                .map_err(|source| SdpError::Graph { line, source })?;
        }
        for (k, cell) in row.args.iter().enumerate() {
            if *cell == "_" {
                continue;
            }
            if cell.is_empty() {
                return Err(SdpError::EmptyCell { line });
            }
            let head = predicates[k];
            if head == dependent {
                return Err(SdpError::SelfArc { line });
            }
            let arc = Arc::new(head, dependent, *cell)
                .map_err(|source| SdpError::Graph { line, source })?;
            graph
                .add_arc(arc)
                .map_err(|source| SdpError::Graph { line, source })?;
        }
    }

    if !graph.is_acyclic() {
        return Err(SdpError::CyclicGraph { line: first_line });
    }
    Ok(graph)
}

pub fn write_sdp_file(graphs: &[SemanticGraph], path: impl AsRef<Path>) -> io::Result<()> {
    write_sdp_corpus(graphs, File::create(path)?)
}

pub fn write_sdp_corpus<W: Write>(graphs: &[SemanticGraph], mut writer: W) -> io::Result<()> {
    for graph in graphs {
        let n = graph.n();
        // Predicates are the tokens with at least one dependent.
        let mut predicates: Vec<usize> = (1..=n)
            .filter(|&p| !graph.dependents_of(p).is_empty())
            .collect();
        predicates.sort_unstable();

        for dependent in 1..=n {
            let token = graph.sentence().token(dependent);
            let top = if graph.contains_arc(0, dependent) { "+" } else { "-" };
            let pred = if predicates.contains(&dependent) { "+" } else { "-" };
            let mut cols = vec![
                dependent.to_string(),
                token.form().to_string(),
                token.lemma().to_string(),
                token.pos().to_string(),
                top.to_string(),
                pred.to_string(),
                token.frame().to_string(),
            ];
            for &p in &predicates {
                cols.push(graph.label(p, dependent).unwrap_or("_").to_string());
            }
            writeln!(writer, "{}", cols.join("\t"))?;
        }
        writeln!(writer)?;
    }
    Ok(())
}
