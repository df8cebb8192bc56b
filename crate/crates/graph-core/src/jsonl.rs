//! Internal corpus format: one JSON record per line, one record per sentence.
//!
//! Each record holds the token list and the arc list explicitly, so graphs
//! survive a round trip without the column bookkeeping of the SDP format.
//! Records are validated on read (dense positions, arc bounds, acyclicity).

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Arc, GraphError, SemanticGraph, Sentence, Token};

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },

    #[error("line {line}: {source}")]
    Graph { line: usize, source: GraphError },
}

#[derive(Serialize, Deserialize)]
struct TokenRecord {
    form: String,
    lemma: String,
    pos: String,
    #[serde(default = "underscore", skip_serializing_if = "is_underscore")]
    frame: String,
}

fn underscore() -> String {
    "_".to_string()
}

fn is_underscore(s: &str) -> bool {
    s == "_"
}

#[derive(Serialize, Deserialize)]
struct ArcRecord {
    head: usize,
    dependent: usize,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    tokens: Vec<TokenRecord>,
    arcs: Vec<ArcRecord>,
}

pub fn read_jsonl_file(path: impl AsRef<Path>) -> Result<Vec<SemanticGraph>, JsonlError> {
    read_jsonl_corpus(BufReader::new(File::open(path)?))
}

pub fn read_jsonl_corpus<R: BufRead>(reader: R) -> Result<Vec<SemanticGraph>, JsonlError> {
    let mut graphs = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord =
            serde_json::from_str(&line).map_err(|source| JsonlError::Json {
                line: line_no,
                source,
            })?;
        let graph = record_to_graph(record).map_err(|source| JsonlError::Graph {
            line: line_no,
            source,
        })?;
        graphs.push(graph);
    }
    Ok(graphs)
}

fn record_to_graph(record: SentenceRecord) -> Result<SemanticGraph, GraphError> {
    let tokens = record
        .tokens
        .into_iter()
        .enumerate()
        .map(|(i, t)| Token::with_frame(i + 1, t.form, t.lemma, t.pos, t.frame))
        .collect::<Result<Vec<_>, _>>()?;
    let sentence = Sentence::new(tokens)?;
    let arcs = record
        .arcs
        .into_iter()
        .map(|a| Arc::new(a.head, a.dependent, a.label))
        .collect::<Result<Vec<_>, _>>()?;
    SemanticGraph::from_arcs(sentence, arcs)
}

pub fn write_jsonl_file(graphs: &[SemanticGraph], path: impl AsRef<Path>) -> io::Result<()> {
    write_jsonl_corpus(graphs, File::create(path)?)
}

pub fn write_jsonl_corpus<W: Write>(graphs: &[SemanticGraph], mut writer: W) -> io::Result<()> {
    for graph in graphs {
        let record = SentenceRecord {
            tokens: graph
                .sentence()
                .tokens()
                .iter()
                .map(|t| TokenRecord {
                    form: t.form().to_string(),
                    lemma: t.lemma().to_string(),
                    pos: t.pos().to_string(),
                    frame: t.frame().to_string(),
                })
                .collect(),
            arcs: graph
                .arcs()
                .map(|(head, dependent, label)| ArcRecord {
                    head,
                    dependent,
                    label: label.to_string(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writeln!(writer)?;
    }
    Ok(())
}
