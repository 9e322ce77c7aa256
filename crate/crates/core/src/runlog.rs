//! Append-only run logs: a header line, then one canonical history entry
//! per line. A final line without its newline is a torn write and is
//! ignored on read.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::model::{canonical, digest, Blueprint, HistoryEntry};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunHeader {
    pub task_id: String,
    pub blueprint_digest: String,
    pub seed: u64,
    pub engine_version: String,
}

impl RunHeader {
    pub fn new(task_id: &str, blueprint: &Blueprint, seed: u64) -> Self {
        RunHeader {
            task_id: task_id.to_string(),
            blueprint_digest: digest(blueprint),
            seed,
            engine_version: ENGINE_VERSION.to_string(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunLogError {
    #[error("run log line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// A parsed run log. Entry lines are kept verbatim so that replay can
/// compare them byte for byte.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunLog {
    pub header: Option<RunHeader>,
    pub lines: Vec<String>,
    /// Length in bytes of the complete-line prefix of the source text.
    pub valid_len: usize,
}

impl RunLog {
    pub fn parse(text: &str) -> Result<RunLog, RunLogError> {
        let valid_len = text.rfind('\n').map_or(0, |i| i + 1);
        let mut lines = text[..valid_len].lines();
        let header =
            match lines.next() {
                None => None,
                Some(first) => Some(canonical::decode::<RunHeader>(first).map_err(|e| {
                    RunLogError::Malformed {
                        line: 1,
                        message: e.to_string(),
                    }
                })?),
            };
        Ok(RunLog {
            header,
            lines: lines.map(str::to_string).collect(),
            valid_len,
        })
    }

    /// Decoded entries. Replay does not need these, reports do.
    pub fn entries(&self) -> Result<Vec<HistoryEntry>, RunLogError> {
        self.lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                canonical::decode(l).map_err(|e| RunLogError::Malformed {
                    line: i + 2,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}

pub fn entry_line(entry: &HistoryEntry) -> String {
    canonical::to_canonical(entry)
}

/// Full text of a log, as an uninterrupted run writes it.
pub fn render(header: &RunHeader, history: &[HistoryEntry]) -> String {
    let mut out = canonical::to_canonical(header);
    out.push('\n');
    for e in history {
        out.push_str(&entry_line(e));
        out.push('\n');
    }
    out
}

pub fn write_line<W: Write>(w: &mut W, line: &str) -> io::Result<()> {
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()
}
