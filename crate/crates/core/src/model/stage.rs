use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed set of locations a thing can occupy inside a flow machine.
///
/// `Storage` is an attachment rather than an exclusive stage: it never takes
/// part in the exclusivity rules and may be wired to most other stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StageKind {
    Create,
    Arrive,
    Accept,
    Receive,
    Process,
    Release,
    Transfer,
    Storage,
}

impl StageKind {
    /// All stage kinds in canonical order.
    pub const ALL: [StageKind; 8] = [
        StageKind::Create,
        StageKind::Arrive,
        StageKind::Accept,
        StageKind::Receive,
        StageKind::Process,
        StageKind::Release,
        StageKind::Transfer,
        StageKind::Storage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Create => "Create",
            StageKind::Arrive => "Arrive",
            StageKind::Accept => "Accept",
            StageKind::Receive => "Receive",
            StageKind::Process => "Process",
            StageKind::Release => "Release",
            StageKind::Transfer => "Transfer",
            StageKind::Storage => "Storage",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Stages a trigger arc may activate.
    pub fn is_trigger_target(self) -> bool {
        matches!(self, StageKind::Create | StageKind::Release)
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown stage `{0}`")]
pub struct UnknownStage(pub String);

impl FromStr for StageKind {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::ALL.iter().copied().find(|k| k.as_str() == s).ok_or_else(|| UnknownStage(s.to_string()))
    }
}

/// Whether a solid flow arc between two stages of the *same* machine is legal.
///
/// Cross-machine arcs are governed by [`is_legal_cross_flow`].
pub fn is_legal_intra_flow(source: StageKind, target: StageKind) -> bool {
    use StageKind::*;
    match (source, target) {
        (Arrive, Accept)
        | (Accept, Process)
        | (Accept, Release)
        | (Receive, Process)
        | (Receive, Release)
        | (Process, Release)
        | (Create, Process)
        | (Create, Release)
        | (Release, Transfer)
        | (Transfer, Arrive)
        | (Transfer, Receive) => true,
        (Storage, other) | (other, Storage) => {
            matches!(other, Accept | Receive | Process | Create | Release)
        }
        _ => false,
    }
}

/// Machines only exchange things through their Transfer stages.
pub fn is_legal_cross_flow(source: StageKind, target: StageKind) -> bool {
    source == StageKind::Transfer && target == StageKind::Transfer
}
