use std::fmt;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::{ArcId, StageKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Created,
    Moved,
    Accepted,
    Rejected,
    Stored,
    Triggered,
    JunctionFired,
    Consumed,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Created => "created",
            Action::Moved => "moved",
            Action::Accepted => "accepted",
            Action::Rejected => "rejected",
            Action::Stored => "stored",
            Action::Triggered => "triggered",
            Action::JunctionFired => "junction-fired",
            Action::Consumed => "consumed",
        }
    }

    /// Actions that put a token at the record's stage.
    pub fn places_token(self) -> bool {
        matches!(self, Action::Created | Action::Moved | Action::Accepted | Action::Stored)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One observable happening. Only the first five fields are serialized;
/// `causes` and `arc` exist in memory for event extraction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub machine: String,
    pub stage: StageKind,
    pub token: u64,
    pub action: Action,
    /// Indices of earlier records in the same trace that brought this one about.
    #[serde(skip)]
    pub causes: Vec<usize>,
    /// The arc whose firing produced this record, if any.
    #[serde(skip)]
    pub arc: Option<ArcId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventTrace {
    pub records: Vec<TraceRecord>,
    /// The run stopped at `max_ticks` without reaching quiescence.
    pub truncated: bool,
    /// Tick of the last step taken.
    pub final_tick: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceReadError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl EventTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Highest tick that has a record.
    pub fn last_tick(&self) -> Option<u64> {
        self.records.last().map(|r| r.tick)
    }

    pub fn at_tick(&self, tick: u64) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.tick == tick)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Reads a JSON Lines trace. Causal links are not part of the format and
    /// come back empty.
    pub fn read_jsonl<R: BufRead>(input: R) -> Result<EventTrace, TraceReadError> {
        let mut records = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|source| TraceReadError::Json { line: i + 1, source })?;
            records.push(record);
        }
        let final_tick = records.last().map_or(0, |r: &TraceRecord| r.tick);
        Ok(EventTrace { records, truncated: false, final_tick })
    }
}
