use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{StageKind, Value};

fn default_max_ticks() -> u64 {
    1000
}

/// External inputs to one simulation run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub initial_tokens: Vec<InitialToken>,
    /// Attribute values for minted tokens that cannot inherit them.
    #[serde(default)]
    pub bindings: BTreeMap<String, Value>,
    /// Named ticks usable as clock bounds in guards.
    #[serde(default)]
    pub deadlines: BTreeMap<String, i64>,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    /// Guard text per machine path, applied to things reaching its Accept stage.
    #[serde(default)]
    pub accept_policy: BTreeMap<String, String>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            initial_tokens: Vec::new(),
            bindings: BTreeMap::new(),
            deadlines: BTreeMap::new(),
            max_ticks: default_max_ticks(),
            accept_policy: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialToken {
    /// Dotted machine path, e.g. `Shelf.Book`.
    pub machine: String,
    pub location: StageKind,
    /// Thing kind; defaults to the machine's kind and must match it if given.
    #[serde(default)]
    pub kind: Option<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, Value>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn token(machine: &str, location: StageKind) -> InitialToken {
        InitialToken { machine: machine.to_string(), location, kind: None, attributes: BTreeMap::new() }
    }
}
