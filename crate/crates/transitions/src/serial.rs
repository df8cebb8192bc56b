//! Text form for transition sequences: one transition per line (`SHIFT` or
//! `ATTACH <head> <label>`), sentences separated by a blank line.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::Transition;

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: cannot parse transition {text:?}")]
    BadTransition { line: usize, text: String },

    #[error("line {line}: bad head position {value:?}")]
    BadHead { line: usize, value: String },
}

fn parse_line(line_no: usize, text: &str) -> Result<Transition, SerialError> {
    if text == "SHIFT" {
        return Ok(Transition::Shift);
    }
    if let Some(rest) = text.strip_prefix("ATTACH ") {
        let (head_text, label) =
            rest.split_once(' ')
                .ok_or_else(|| SerialError::BadTransition {
                    line: line_no,
                    text: text.to_string(),
                })?;
        let head: usize = head_text.parse().map_err(|_| SerialError::BadHead {
            line: line_no,
            value: head_text.to_string(),
        })?;
        if label.is_empty() {
            return Err(SerialError::BadTransition {
                line: line_no,
                text: text.to_string(),
            });
        }
        return Ok(Transition::Attach {
            head,
            label: label.to_string(),
        });
    }
    Err(SerialError::BadTransition {
        line: line_no,
        text: text.to_string(),
    })
}

/// Parses one sentence's worth of transitions (no blank-line handling).
pub fn parse_sequence(text: &str) -> Result<Vec<Transition>, SerialError> {
    text.lines()
        .enumerate()
        .map(|(i, line)| parse_line(i + 1, line.trim_end()))
        .collect()
}

/// Reads a multi-sentence transition file: blank lines close a sequence.
pub fn read_sequences<R: BufRead>(reader: R) -> Result<Vec<Vec<Transition>>, SerialError> {
    let mut sequences = Vec::new();
    let mut current: Vec<Transition> = Vec::new();
    let mut in_block = false;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if in_block {
                sequences.push(std::mem::take(&mut current));
                in_block = false;
            }
            continue;
        }
        in_block = true;
        current.push(parse_line(index + 1, line)?);
    }
    if in_block {
        sequences.push(current);
    }
    Ok(sequences)
}

pub fn write_sequences<W: Write>(sequences: &[Vec<Transition>], mut writer: W) -> io::Result<()> {
    for sequence in sequences {
        for transition in sequence {
            writeln!(writer, "{transition}")?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn round_trip() {
        let sequences = vec![
            vec![
                Transition::attach(0, "ROOT"),
                Transition::Shift,
                Transition::attach(3, "compound name"),
                Transition::Shift,
            ],
            vec![Transition::Shift],
        ];
        let mut buf = Vec::new();
        write_sequences(&sequences, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ATTACH 0 ROOT\nSHIFT\n"));
        let back = read_sequences(Cursor::new(&buf)).unwrap();
        assert_eq!(sequences, back);
    }

    #[test]
    fn label_may_contain_spaces() {
        // Only the first two fields are positional; the rest is the label.
        let t = parse_line(1, "ATTACH 2 a b c").unwrap();
        assert_eq!(t, Transition::attach(2, "a b c"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            parse_sequence("SHIFT\nATTACH x y"),
            Err(SerialError::BadHead { line: 2, .. })
        ));
        assert!(matches!(
            parse_sequence("shift"),
            Err(SerialError::BadTransition { line: 1, .. })
        ));
        assert!(matches!(
            parse_sequence("ATTACH 2"),
            Err(SerialError::BadTransition { line: 1, .. })
        ));
    }
}
