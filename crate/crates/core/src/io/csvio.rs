//! CSV formats: beat annotations and run-length state labels.
//!
//! Both use `,` separators, `\n` line ends and a required header row.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::{Beat, EcgAnnotations, LabelSequence, State};

const ANN_HEADER: &str = "r_peak_sample,t_end_sample";
const LABEL_HEADER: &str = "start_sample,end_sample,state";

fn lines(path: &Path) -> Result<Vec<String>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(f)
        .lines()
        .map(|l| l.map_err(|e| Error::io(path, e)))
        .collect()
}

fn parse_index(field: &str, path: &Path, what: &'static str, line_no: usize) -> Result<usize> {
    field.trim().parse::<usize>().map_err(|_| {
        Error::format(
            what,
            path,
            format!("line {line_no}: non-integer field {field:?}"),
        )
    })
}

/// Reads `r_peak_sample,t_end_sample` rows; enforces beat ordering.
pub fn read_annotations(path: &Path) -> Result<EcgAnnotations> {
    let lines = lines(path)?;
    let mut it = lines.iter().enumerate();
    match it.next() {
        Some((_, header)) if header.trim() == ANN_HEADER => {}
        Some((_, header)) => {
            return Err(Error::format(
                "annotations",
                path,
                format!("expected header {ANN_HEADER:?}, got {header:?}"),
            ))
        }
        None => return Err(Error::format("annotations", path, "empty file")),
    }
    let mut beats = Vec::new();
    for (i, line) in it {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::format(
                    "annotations",
                    path,
                    format!("line {}: expected 2 fields", i + 1),
                ))
            }
        };
        beats.push(Beat {
            r_peak: parse_index(a, path, "annotations", i + 1)?,
            t_end: parse_index(b, path, "annotations", i + 1)?,
        });
    }
    if beats.is_empty() {
        return Err(Error::format("annotations", path, "no beat rows"));
    }
    EcgAnnotations::new(beats)
        .map_err(|e| Error::format("annotations", path, e.to_string()))
}

pub fn write_annotations(ann: &EcgAnnotations, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(w, "{ANN_HEADER}").map_err(|e| Error::io(path, e))?;
    for b in &ann.beats {
        writeln!(w, "{},{}", b.r_peak, b.t_end).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads run-length `start_sample,end_sample,state` rows into a per-sample
/// sequence. Runs must be contiguous, non-overlapping and cover [0, T).
/// The sampling rate is not part of the file; the caller supplies it.
pub fn read_labels(path: &Path, fs: f64) -> Result<LabelSequence> {
    let lines = lines(path)?;
    let mut it = lines.iter().enumerate();
    match it.next() {
        Some((_, header)) if header.trim() == LABEL_HEADER => {}
        Some((_, header)) => {
            return Err(Error::format(
                "labels",
                path,
                format!("expected header {LABEL_HEADER:?}, got {header:?}"),
            ))
        }
        None => return Err(Error::format("labels", path, "empty file")),
    }
    let mut states: Vec<State> = Vec::new();
    for (i, line) in it {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::format(
                "labels",
                path,
                format!("line {}: expected 3 fields", i + 1),
            ));
        }
        let start = parse_index(fields[0], path, "labels", i + 1)?;
        let end = parse_index(fields[1], path, "labels", i + 1)?;
        let state = State::from_token(fields[2].trim())
            .map_err(|e| Error::format("labels", path, format!("line {}: {e}", i + 1)))?;
        if start != states.len() {
            return Err(Error::format(
                "labels",
                path,
                format!(
                    "line {}: run starts at {start} but previous runs cover [0, {})",
                    i + 1,
                    states.len()
                ),
            ));
        }
        if end < start {
            return Err(Error::format(
                "labels",
                path,
                format!("line {}: end {end} before start {start}", i + 1),
            ));
        }
        states.resize(end + 1, state);
    }
    if states.is_empty() {
        return Err(Error::format("labels", path, "no label runs"));
    }
    Ok(LabelSequence::new(states, fs))
}

/// Writes a label sequence as run-length rows (end indices inclusive).
pub fn write_labels(labels: &LabelSequence, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    writeln!(w, "{LABEL_HEADER}").map_err(|e| Error::io(path, e))?;
    for (start, end, state) in labels.runs() {
        writeln!(w, "{start},{end},{}", state.token()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
