//! Whole-model validation with stable diagnostic codes, plus flow
//! reachability analysis.

mod reach;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::dsl::Severity;
use crate::model::{
    is_legal_cross_flow, is_legal_intra_flow, ArcId, JunctionId, MachineId, Model, SphereId, StageKind, StageRef,
    ThingId, TriggerSource, TriggerTarget,
};

pub use reach::{dead_stages, flow_origins, reachable_from, reachable_stages, ReachabilitySet, UnresolvedOrigin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Code {
    /// Duplicate stage kind in a machine.
    E001,
    /// Illegal flow-arc stage pair.
    E002,
    /// Machine contains a subsphere.
    E003,
    /// Dangling endpoint.
    E004,
    /// Receive coexists with Arrive/Accept.
    E005,
    /// Sphere cycle.
    E006,
    /// Trigger target is not Create/Release.
    E007,
    /// Junction with fewer than two inputs.
    E008,
    /// Guard references an unknown attribute.
    E009,
    /// Inert or unreachable stage.
    W001,
    /// Storage that is never read.
    W002,
}

impl Code {
    pub const ALL: [Code; 11] = [
        Code::E001,
        Code::E002,
        Code::E003,
        Code::E004,
        Code::E005,
        Code::E006,
        Code::E007,
        Code::E008,
        Code::E009,
        Code::W001,
        Code::W002,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Code::E001 => "FM-E001",
            Code::E002 => "FM-E002",
            Code::E003 => "FM-E003",
            Code::E004 => "FM-E004",
            Code::E005 => "FM-E005",
            Code::E006 => "FM-E006",
            Code::E007 => "FM-E007",
            Code::E008 => "FM-E008",
            Code::E009 => "FM-E009",
            Code::W001 => "FM-W001",
            Code::W002 => "FM-W002",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            Code::W001 | Code::W002 => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// The model element a diagnostic is about. Ordered by kind, then by
/// declaration index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Thing(ThingId),
    Sphere(SphereId),
    Machine(MachineId),
    Stage(StageRef),
    Arc(ArcId),
    Junction(JunctionId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub severity: Severity,
    pub message: String,
    #[serde(rename = "subject")]
    pub subject_name: String,
    #[serde(skip)]
    pub subject: Subject,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]: {} ({})", self.severity, self.code, self.message, self.subject_name)
    }
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(|d| d.severity == Severity::Error)
}

struct Checker<'m> {
    model: &'m Model,
    out: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn name(&self, subject: Subject) -> String {
        let m = self.model;
        match subject {
            Subject::Thing(t) => m.thing(t).map_or_else(|| format!("thing#{}", t.0), |t| t.name.clone()),
            Subject::Sphere(s) => {
                let path = m.sphere_path(s).join(".");
                if path.is_empty() {
                    format!("sphere#{}", s.0)
                } else {
                    path
                }
            }
            Subject::Machine(id) => m.machine_path(id),
            Subject::Stage(s) => m.stage_label(s),
            Subject::Arc(a) => format!("arc#{}", a.0),
            Subject::Junction(j) => {
                m.junction(j).map_or_else(|| format!("junction#{}", j.0), |j| format!("junction {}", j.name))
            }
        }
    }

    fn push(&mut self, code: Code, subject: Subject, message: String) {
        let subject_name = self.name(subject);
        self.out.push(Diagnostic { code, severity: code.severity(), message, subject_name, subject });
    }

    fn machines(&mut self) {
        for id in self.model.machine_ids() {
            let m = &self.model.machines()[id.0];
            let mut seen = BTreeSet::new();
            let mut dupes = BTreeSet::new();
            for &s in &m.stages {
                if !seen.insert(s) {
                    dupes.insert(s);
                }
            }
            for s in dupes {
                self.push(Code::E001, Subject::Machine(id), format!("stage {s} appears more than once"));
            }
            if seen.contains(&StageKind::Receive)
                && (seen.contains(&StageKind::Arrive) || seen.contains(&StageKind::Accept))
            {
                self.push(
                    Code::E005,
                    Subject::Machine(id),
                    "Receive replaces Arrive and Accept; they cannot coexist".into(),
                );
            }
            if !m.subspheres.is_empty() {
                self.push(
                    Code::E003,
                    Subject::Machine(id),
                    format!("machine contains {} subsphere(s)", m.subspheres.len()),
                );
            }
            if self.model.thing(m.kind).is_none() {
                self.push(
                    Code::E004,
                    Subject::Machine(id),
                    format!("machine refers to missing thing kind #{}", m.kind.0),
                );
            }
        }
    }

    fn spheres(&mut self) {
        let spheres = self.model.spheres();
        if spheres[0].parent.is_some() {
            self.push(Code::E006, Subject::Sphere(SphereId::ROOT), "the root sphere has a parent".into());
        }
        let mut cycles: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut orphans = Vec::new();
        for start in 1..spheres.len() {
            let mut walk = vec![start];
            let mut cur = start;
            loop {
                match spheres[cur].parent {
                    None => {
                        orphans.push(start);
                        break;
                    }
                    Some(p) if p.0 >= spheres.len() => {
                        orphans.push(start);
                        break;
                    }
                    Some(p) if p == SphereId::ROOT => break,
                    Some(p) => {
                        if let Some(pos) = walk.iter().position(|&w| w == p.0) {
                            let mut cycle = walk[pos..].to_vec();
                            cycle.sort_unstable();
                            cycles.insert(cycle);
                            break;
                        }
                        walk.push(p.0);
                        cur = p.0;
                    }
                }
            }
        }
        for cycle in cycles {
            let names: Vec<String> = cycle.iter().map(|&s| spheres[s].name.clone()).collect();
            self.push(
                Code::E006,
                Subject::Sphere(SphereId(cycle[0])),
                format!("sphere parents form a cycle: {}", names.join(", ")),
            );
        }
        for s in orphans {
            self.push(Code::E006, Subject::Sphere(SphereId(s)), "sphere is not attached to the root".into());
        }
    }

    fn arcs(&mut self) {
        let model = self.model;
        for (id, flow) in model.flow_arcs() {
            let mut dangling = false;
            for end in [flow.source, flow.target] {
                if !model.contains_stage(end) {
                    dangling = true;
                    self.push(
                        Code::E004,
                        Subject::Arc(id),
                        format!("flow endpoint {} does not exist", model.stage_label(end)),
                    );
                }
            }
            if dangling {
                continue;
            }
            let (s, t) = (flow.source, flow.target);
            let legal = if s.machine == t.machine {
                is_legal_intra_flow(s.stage, t.stage)
            } else {
                is_legal_cross_flow(s.stage, t.stage)
            };
            if !legal {
                self.push(
                    Code::E002,
                    Subject::Arc(id),
                    format!("{} -> {} is not a legal flow", model.stage_label(s), model.stage_label(t)),
                );
            } else if model.machines()[s.machine.0].kind != model.machines()[t.machine.0].kind {
                self.push(
                    Code::E002,
                    Subject::Arc(id),
                    format!(
                        "{} -> {} joins machines carrying different things",
                        model.stage_label(s),
                        model.stage_label(t)
                    ),
                );
            }
        }
        for (id, trig) in model.trigger_arcs() {
            let source_ok = match trig.source {
                TriggerSource::Stage(s) => model.contains_stage(s),
                TriggerSource::Junction(j) => model.junction(j).is_some(),
            };
            if !source_ok {
                self.push(Code::E004, Subject::Arc(id), "trigger source does not exist".into());
            }
            match trig.target {
                TriggerTarget::Stage(t) if !model.contains_stage(t) => {
                    self.push(
                        Code::E004,
                        Subject::Arc(id),
                        format!("trigger target {} does not exist", model.stage_label(t)),
                    );
                }
                TriggerTarget::Stage(t) if !t.stage.is_trigger_target() => {
                    self.push(
                        Code::E007,
                        Subject::Arc(id),
                        format!("trigger targets {}; only Create or Release may be triggered", model.stage_label(t)),
                    );
                }
                TriggerTarget::Junction(j) if model.junction(j).is_none() => {
                    self.push(Code::E004, Subject::Arc(id), format!("trigger targets missing junction #{}", j.0));
                }
                _ => {}
            }
            if let (Some(guard), TriggerSource::Stage(s)) = (&trig.guard, trig.source) {
                if let Some(kind) = model.contains_stage(s).then(|| model.kind_of(s.machine)).flatten() {
                    let issues = guard.check(kind);
                    if !issues.is_empty() {
                        let text: Vec<String> = issues.iter().map(ToString::to_string).collect();
                        self.push(
                            Code::E009,
                            Subject::Arc(id),
                            format!("guard on thing `{}`: {}", kind.name, text.join("; ")),
                        );
                    }
                }
            }
        }
    }

    fn junctions(&mut self) {
        let model = self.model;
        for (i, j) in model.junctions().iter().enumerate() {
            let id = JunctionId(i);
            if j.inputs.len() < 2 {
                self.push(
                    Code::E008,
                    Subject::Junction(id),
                    format!("junction has {} input(s); at least 2 are required", j.inputs.len()),
                );
            }
            let output_ok = model
                .arc(j.output)
                .and_then(|a| a.as_trigger())
                .is_some_and(|t| t.source == TriggerSource::Junction(id));
            if !output_ok {
                self.push(Code::E004, Subject::Junction(id), "junction output is not a trigger leaving it".into());
            }
            for input in &j.inputs {
                let ok = model
                    .arc(*input)
                    .and_then(|a| a.as_trigger())
                    .is_some_and(|t| t.target == TriggerTarget::Junction(id));
                if !ok {
                    self.push(
                        Code::E004,
                        Subject::Junction(id),
                        format!("junction input arc#{} does not trigger it", input.0),
                    );
                }
            }
        }
    }

    fn stages(&mut self) {
        let model = self.model;
        let mut incident = BTreeSet::new();
        let mut read_storage = BTreeSet::new();
        for arc in model.arcs() {
            match arc {
                crate::model::ModelArc::Flow(f) => {
                    incident.insert(f.source);
                    incident.insert(f.target);
                    read_storage.insert(f.source);
                }
                crate::model::ModelArc::Trigger(t) => {
                    if let TriggerSource::Stage(s) = t.source {
                        incident.insert(s);
                    }
                    if let TriggerTarget::Stage(s) = t.target {
                        incident.insert(s);
                    }
                }
            }
        }
        let dead = dead_stages(model);
        for stage in model.stage_refs() {
            if stage.stage == StageKind::Storage {
                if !read_storage.contains(&stage) {
                    self.push(
                        Code::W002,
                        Subject::Stage(stage),
                        "storage has no outgoing flow; stored things are never read".into(),
                    );
                }
            } else if !incident.contains(&stage) {
                self.push(Code::W001, Subject::Stage(stage), "stage has no arcs".into());
            } else if dead.contains(&stage) {
                self.push(Code::W001, Subject::Stage(stage), "no thing can reach this stage".into());
            }
        }
    }
}

/// Checks every rule in the code table. An empty result means the model is
/// clean; results are sorted by severity, code and subject.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut checker = Checker { model, out: Vec::new() };
    checker.spheres();
    checker.machines();
    checker.arcs();
    checker.junctions();
    checker.stages();
    let mut out = checker.out;
    out.sort_by_key(|d| (d.severity, d.code, d.subject));
    out
}

/// Pretty JSON array of diagnostics, newline-terminated.
pub fn to_json(diagnostics: &[Diagnostic]) -> String {
    let mut text = serde_json::to_string_pretty(diagnostics).expect("diagnostics serialize");
    text.push('\n');
    text
}
