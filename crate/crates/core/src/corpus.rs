//! Bundled example models with their scenarios and golden outputs.

use crate::sim::Scenario;

#[derive(Debug, Clone, Copy)]
pub struct CorpusScenario {
    pub name: &'static str,
    pub json: &'static str,
    /// Expected JSON Lines trace.
    pub golden_trace: &'static str,
    /// Expected events document.
    pub golden_events: &'static str,
}

impl CorpusScenario {
    pub fn scenario(&self) -> Scenario {
        Scenario::from_json(self.json).expect("bundled scenario parses")
    }

    /// File name of the scenario next to the model, e.g. `callcenter-accept.json`.
    pub fn file_name(&self, stem: &str) -> String {
        if self.name == "default" {
            format!("{stem}.json")
        } else {
            format!("{stem}-{}.json", self.name)
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    /// File stem of the model, e.g. `book` for `book.fm`.
    pub stem: &'static str,
    pub source: &'static str,
    pub scenarios: &'static [CorpusScenario],
    /// Expected `validate --json` output.
    pub golden_diagnostics: &'static str,
}

impl CorpusEntry {
    pub fn file_name(&self) -> String {
        format!("{}.fm", self.stem)
    }

    pub fn scenario(&self, name: &str) -> Option<&'static CorpusScenario> {
        self.scenarios.iter().find(|s| s.name == name)
    }
}

macro_rules! scenario {
    ($name:literal, $file:literal, $golden:literal) => {
        CorpusScenario {
            name: $name,
            json: include_str!(concat!("../corpus/", $file)),
            golden_trace: include_str!(concat!("../corpus/golden/", $golden, ".jsonl")),
            golden_events: include_str!(concat!("../corpus/golden/", $golden, ".events.json")),
        }
    };
}

static ENTRIES: &[CorpusEntry] = &[
    CorpusEntry {
        name: "book-flow",
        stem: "book",
        source: include_str!("../corpus/book.fm"),
        scenarios: &[scenario!("default", "book.json", "book")],
        golden_diagnostics: include_str!("../corpus/golden/book.diagnostics.json"),
    },
    CorpusEntry {
        name: "speaker-listener",
        stem: "speaker",
        source: include_str!("../corpus/speaker.fm"),
        scenarios: &[scenario!("default", "speaker.json", "speaker")],
        golden_diagnostics: include_str!("../corpus/golden/speaker.diagnostics.json"),
    },
    CorpusEntry {
        name: "job-offer-events",
        stem: "joboffer",
        source: include_str!("../corpus/joboffer.fm"),
        scenarios: &[scenario!("default", "joboffer.json", "joboffer")],
        golden_diagnostics: include_str!("../corpus/golden/joboffer.diagnostics.json"),
    },
    CorpusEntry {
        name: "phosphorus-cycle",
        stem: "phosphorus",
        source: include_str!("../corpus/phosphorus.fm"),
        scenarios: &[scenario!("default", "phosphorus.json", "phosphorus")],
        golden_diagnostics: include_str!("../corpus/golden/phosphorus.diagnostics.json"),
    },
    CorpusEntry {
        name: "call-center",
        stem: "callcenter",
        source: include_str!("../corpus/callcenter.fm"),
        scenarios: &[
            scenario!("accept", "callcenter-accept.json", "callcenter-accept"),
            scenario!("decline", "callcenter-decline.json", "callcenter-decline"),
            scenario!("expired", "callcenter-expired.json", "callcenter-expired"),
            scenario!("negative", "callcenter-negative.json", "callcenter-negative"),
        ],
        golden_diagnostics: include_str!("../corpus/golden/callcenter.diagnostics.json"),
    },
];

pub fn corpus() -> &'static [CorpusEntry] {
    ENTRIES
}

/// Looks an entry up by name or by file stem.
pub fn find(name: &str) -> Option<&'static CorpusEntry> {
    let name = name.strip_suffix(".fm").unwrap_or(name);
    ENTRIES.iter().find(|e| e.name == name || e.stem == name)
}
