use std::collections::{BTreeMap, BTreeSet};

use crate::dsl::parse_guard;
use crate::model::{
    ArcId, ClockBound, Guard, MachineId, Model, StageKind, StageRef, ThingId, TriggerSource, TriggerTarget, Value,
};
use crate::validate::{has_errors, validate};

use super::scenario::Scenario;
use super::trace::{Action, EventTrace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("model has validation errors: {0}")]
    InvalidModel(String),
    #[error("max_ticks must be at least 1")]
    ZeroMaxTicks,
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("machine `{machine}` carries `{expected}`, not `{found}`")]
    KindMismatch { machine: String, expected: String, found: String },
    #[error("machine `{machine}` has no {stage} stage")]
    StageAbsent { machine: String, stage: StageKind },
    #[error("initial token in `{machine}`: {message}")]
    BadAttribute { machine: String, message: String },
    #[error("binding `{name}` = `{value}` is outside the domain of attribute `{name}`")]
    BadBinding { name: String, value: Value },
    #[error("guard refers to deadline `{0}`, which the scenario does not define")]
    UnresolvedDeadline(String),
    #[error("accept policy for `{machine}`: {message}")]
    BadPolicy { machine: String, message: String },
}

/// A name used in a guard that neither the token nor the scenario defines.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unresolved name `{0}`")]
pub struct UnresolvedName(pub String);

/// Evaluates a guard for one token at `tick`.
///
/// Attribute names look at the token first and then at the bindings; clock
/// bounds look at integer token attributes and then at the deadlines.
pub fn eval_guard(
    guard: &Guard,
    attributes: &BTreeMap<String, Value>,
    bindings: &BTreeMap<String, Value>,
    tick: i64,
    deadlines: &BTreeMap<String, i64>,
) -> Result<bool, UnresolvedName> {
    Ok(match guard {
        Guard::Equals { attribute, value } => {
            let actual = attributes
                .get(attribute)
                .or_else(|| bindings.get(attribute))
                .ok_or_else(|| UnresolvedName(attribute.clone()))?;
            actual == value
        }
        Guard::Clock { op, bound } => {
            let bound = match bound {
                ClockBound::Literal(n) => *n,
                ClockBound::Named(name) => match attributes.get(name) {
                    Some(Value::Int(n)) => *n,
                    _ => *deadlines.get(name).ok_or_else(|| UnresolvedName(name.clone()))?,
                },
            };
            op.holds(tick, bound)
        }
        Guard::And(a, b) => {
            eval_guard(a, attributes, bindings, tick, deadlines)?
                && eval_guard(b, attributes, bindings, tick, deadlines)?
        }
        Guard::Or(a, b) => {
            eval_guard(a, attributes, bindings, tick, deadlines)?
                || eval_guard(b, attributes, bindings, tick, deadlines)?
        }
        Guard::Not(g) => !eval_guard(g, attributes, bindings, tick, deadlines)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    At(StageRef),
    Consumed,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: u64,
    pub kind: ThingId,
    pub attributes: BTreeMap<String, Value>,
    pub location: Location,
    /// Arrived at its Transfer stage from another machine.
    inbound: bool,
    /// Tick at which the token reached its current location.
    since: u64,
    last_record: usize,
}

impl Token {
    pub fn is_live(&self) -> bool {
        matches!(self.location, Location::At(_))
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    record: usize,
    token: u64,
    stage: StageRef,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub tick: u64,
    /// Every token ever minted, indexed by `id - 1`.
    pub tokens: Vec<Token>,
    /// Per junction: latched input arc and the record that latched it.
    pub latches: Vec<BTreeMap<ArcId, usize>>,
    pub next_token: u64,
    entries: Vec<Entry>,
}

impl SimState {
    pub fn live_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_live())
    }
}

/// A running simulation over a borrowed model.
#[derive(Debug, Clone)]
pub struct Simulation<'m> {
    model: &'m Model,
    scenario: Scenario,
    policies: BTreeMap<MachineId, Guard>,
    /// Machines whose Release stage is only entered on a trigger.
    gated: BTreeSet<MachineId>,
    state: SimState,
    records: Vec<TraceRecord>,
}

/// Places the scenario's initial tokens; their `created` records carry tick 0.
pub fn init<'m>(model: &'m Model, scenario: &Scenario) -> Result<Simulation<'m>, SimError> {
    Simulation::new(model, scenario.clone())
}

/// Steps until quiescence or until `max_ticks`.
pub fn run(model: &Model, scenario: &Scenario) -> Result<EventTrace, SimError> {
    let mut sim = init(model, scenario)?;
    let truncated = loop {
        if sim.state.tick >= sim.scenario.max_ticks {
            break !sim.clone().step().is_empty();
        }
        if sim.step().is_empty() {
            break false;
        }
    };
    Ok(sim.into_trace(truncated))
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m Model, scenario: Scenario) -> Result<Self, SimError> {
        let diagnostics = validate(model);
        if has_errors(&diagnostics) {
            return Err(SimError::InvalidModel(diagnostics[0].to_string()));
        }
        if scenario.max_ticks == 0 {
            return Err(SimError::ZeroMaxTicks);
        }
        for (name, value) in &scenario.bindings {
            let outside = model.things().iter().filter_map(|k| k.attribute(name)).any(|a| !a.domain.contains(value));
            if outside {
                return Err(SimError::BadBinding { name: name.clone(), value: value.clone() });
            }
        }
        for (_, trig) in model.trigger_arcs() {
            if let (Some(guard), TriggerSource::Stage(s)) = (&trig.guard, trig.source) {
                let kind = model.kind_of(s.machine).expect("validated");
                check_deadlines(guard, kind, &scenario)?;
            }
        }
        let mut policies = BTreeMap::new();
        for (path, text) in &scenario.accept_policy {
            let bad = |message: String| SimError::BadPolicy { machine: path.clone(), message };
            let id = model.machine_by_path(path).ok_or_else(|| SimError::UnknownMachine(path.clone()))?;
            if !model.machines()[id.0].has_stage(StageKind::Accept) {
                return Err(bad("machine has no Accept stage".into()));
            }
            let guard = parse_guard(text).map_err(|d| bad(d.message))?;
            let kind = model.kind_of(id).expect("validated");
            if let Some(issue) = guard.check(kind).first() {
                return Err(bad(issue.to_string()));
            }
            check_deadlines(&guard, kind, &scenario)?;
            policies.insert(id, guard);
        }
        let gated = model
            .trigger_arcs()
            .filter_map(|(_, t)| match t.target {
                TriggerTarget::Stage(s) if s.stage == StageKind::Release => Some(s.machine),
                _ => None,
            })
            .collect();
        let state = SimState {
            tick: 0,
            tokens: Vec::new(),
            latches: vec![BTreeMap::new(); model.junctions().len()],
            next_token: 1,
            entries: Vec::new(),
        };
        let mut sim = Simulation { model, scenario, policies, gated, state, records: Vec::new() };
        for initial in sim.scenario.initial_tokens.clone() {
            let id = model
                .machine_by_path(&initial.machine)
                .ok_or_else(|| SimError::UnknownMachine(initial.machine.clone()))?;
            let machine = &model.machines()[id.0];
            let kind = model.kind_of(id).expect("validated");
            if let Some(found) = &initial.kind {
                if *found != kind.name {
                    return Err(SimError::KindMismatch {
                        machine: initial.machine.clone(),
                        expected: kind.name.clone(),
                        found: found.clone(),
                    });
                }
            }
            if !machine.has_stage(initial.location) {
                return Err(SimError::StageAbsent { machine: initial.machine.clone(), stage: initial.location });
            }
            for (name, value) in &initial.attributes {
                let ok = kind.attribute(name).is_some_and(|a| a.domain.contains(value));
                if !ok {
                    return Err(SimError::BadAttribute {
                        machine: initial.machine.clone(),
                        message: format!("`{name}` = `{value}` is not an attribute value of `{}`", kind.name),
                    });
                }
            }
            sim.mint(StageRef::new(id, initial.location), &initial.attributes, Vec::new(), None);
        }
        sim.state.entries = sim.placements(0);
        Ok(sim)
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn tick(&self) -> u64 {
        self.state.tick
    }

    /// All records so far, including the initial placements.
    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn into_trace(self, truncated: bool) -> EventTrace {
        EventTrace { final_tick: self.state.tick, records: self.records, truncated }
    }

    fn token(&self, id: u64) -> &Token {
        &self.state.tokens[(id - 1) as usize]
    }

    fn token_mut(&mut self, id: u64) -> &mut Token {
        &mut self.state.tokens[(id - 1) as usize]
    }

    fn record(&mut self, stage: StageRef, token: u64, action: Action, causes: Vec<usize>, arc: Option<ArcId>) -> usize {
        let record = TraceRecord {
            tick: self.state.tick + 1,
            machine: self.model.machine_path(stage.machine),
            stage: stage.stage,
            token,
            action,
            causes,
            arc,
        };
        self.records.push(record);
        self.records.len() - 1
    }

    fn placements(&self, from: usize) -> Vec<Entry> {
        self.records[from..]
            .iter()
            .enumerate()
            .filter(|(_, r)| r.action.places_token())
            .map(|(i, r)| {
                let token = self.token(r.token);
                let stage = match token.location {
                    Location::At(s) if s.stage == r.stage => s,
                    _ => StageRef::new(self.model.machine_by_path(&r.machine).expect("own record"), r.stage),
                };
                Entry { record: from + i, token: r.token, stage }
            })
            .collect()
    }

    /// Mints a token at a Create stage (or an initial location). Attributes
    /// come from `inherited` by name, then the bindings, then kind defaults.
    fn mint(
        &mut self,
        at: StageRef,
        inherited: &BTreeMap<String, Value>,
        causes: Vec<usize>,
        arc: Option<ArcId>,
    ) -> u64 {
        let model = self.model;
        let kind_id = model.machines()[at.machine.0].kind;
        let kind = &model.things()[kind_id.0];
        let attributes = kind
            .attributes
            .iter()
            .map(|a| {
                let value = [inherited.get(&a.name), self.scenario.bindings.get(&a.name)]
                    .into_iter()
                    .flatten()
                    .find(|v| a.domain.contains(v))
                    .cloned()
                    .unwrap_or_else(|| a.domain.default_value());
                (a.name.clone(), value)
            })
            .collect();
        let id = self.state.next_token;
        self.state.next_token += 1;
        // Initial tokens are stamped at tick 0, one below the first step.
        let initial = causes.is_empty();
        let record = self.record(at, id, Action::Created, causes, arc);
        if initial {
            self.records[record].tick = self.state.tick;
        }
        self.state.tokens.push(Token {
            id,
            kind: kind_id,
            attributes,
            location: Location::At(at),
            inbound: false,
            since: self.records[record].tick,
            last_record: record,
        });
        id
    }

    fn place(&mut self, token: u64, at: StageRef, record: usize, inbound: bool) {
        let tick = self.state.tick + 1;
        let t = self.token_mut(token);
        t.location = Location::At(at);
        t.inbound = inbound;
        t.since = tick;
        t.last_record = record;
    }

    fn is_gated(&self, target: StageRef) -> bool {
        target.stage == StageKind::Release && self.gated.contains(&target.machine)
    }

    fn out_arcs(&self, token: &Token, at: StageRef) -> Vec<(ArcId, StageRef)> {
        self.model
            .flow_arcs()
            .filter(|(_, f)| f.source == at)
            .filter(|(_, f)| at.stage != StageKind::Transfer || token.inbound == (f.target.machine == at.machine))
            .map(|(id, f)| (id, f.target))
            .collect()
    }

    /// Advances one tick. Returns the records of this tick; an empty slice
    /// means the model is quiescent and the tick did not advance.
    pub fn step(&mut self) -> &[TraceRecord] {
        let start = self.records.len();
        let previous = std::mem::take(&mut self.state.entries);
        let mut acted = BTreeSet::new();

        let mut moves = Vec::new();
        let mut consumes = Vec::new();
        for token in self.state.live_tokens() {
            let Location::At(at) = token.location else { continue };
            let arcs = self.out_arcs(token, at);
            if arcs.is_empty() {
                if at.stage != StageKind::Storage {
                    consumes.push(token.id);
                }
            } else if let Some(&(arc, target)) = arcs.iter().find(|(_, t)| !self.is_gated(*t)) {
                moves.push((arc, token.id, at, target));
            }
        }
        moves.sort_by_key(|&(arc, token, _, _)| (arc, token));
        for (arc, token, from, target) in moves {
            let last = self.token(token).last_record;
            let mut action = match target.stage {
                StageKind::Storage => Action::Stored,
                _ => Action::Moved,
            };
            if target.stage == StageKind::Accept {
                action = match self.policies.get(&target.machine) {
                    Some(policy) if !self.admits(policy, token) => Action::Rejected,
                    _ => Action::Accepted,
                };
            }
            let record = self.record(target, token, action, vec![last], Some(arc));
            if action == Action::Rejected {
                self.token_mut(token).location = Location::Rejected;
                self.token_mut(token).last_record = record;
            } else {
                self.place(token, target, record, from.machine != target.machine);
            }
            acted.insert(token);
        }
        for token in consumes {
            let Location::At(at) = self.token(token).location else { continue };
            let last = self.token(token).last_record;
            let record = self.record(at, token, Action::Consumed, vec![last], None);
            let t = self.token_mut(token);
            t.location = Location::Consumed;
            t.last_record = record;
            acted.insert(token);
        }

        let mut releases: Vec<(StageRef, Vec<usize>)> = Vec::new();
        let firing_tick = (self.state.tick + 1) as i64;
        let triggers: Vec<_> = self.model.trigger_arcs().map(|(id, t)| (id, t.clone())).collect();
        for (arc, trig) in triggers {
            let TriggerSource::Stage(source) = trig.source else { continue };
            for entry in previous.iter().filter(|e| e.stage == source) {
                if let Some(guard) = &trig.guard {
                    let attrs = &self.token(entry.token).attributes;
                    let pass = eval_guard(guard, attrs, &self.scenario.bindings, firing_tick, &self.scenario.deadlines);
                    if !pass.unwrap_or(false) {
                        continue;
                    }
                }
                let target = match trig.target {
                    TriggerTarget::Stage(s) => s,
                    TriggerTarget::Junction(j) => self.junction_target(j.0),
                };
                let fired = self.record(target, entry.token, Action::Triggered, vec![entry.record], Some(arc));
                match trig.target {
                    TriggerTarget::Junction(j) => {
                        self.state.latches[j.0].insert(arc, fired);
                    }
                    TriggerTarget::Stage(s) if s.stage == StageKind::Create => {
                        let attrs = self.token(entry.token).attributes.clone();
                        let minted = self.mint(s, &attrs, vec![fired], Some(arc));
                        acted.insert(minted);
                    }
                    TriggerTarget::Stage(s) => match releases.iter_mut().find(|(r, _)| *r == s) {
                        Some((_, causes)) => causes.push(fired),
                        None => releases.push((s, vec![fired])),
                    },
                }
            }
        }
        for (target, causes) in releases {
            let count = causes.len();
            self.release(target, &causes, count, &mut acted);
        }

        for j in 0..self.model.junctions().len() {
            let junction = &self.model.junctions()[j];
            let latches = &self.state.latches[j];
            if junction.inputs.is_empty() || !junction.inputs.iter().all(|i| latches.contains_key(i)) {
                continue;
            }
            let mut causes: Vec<usize> = latches.values().copied().collect();
            causes.sort_unstable();
            let completing = *causes.last().expect("non-empty");
            let token = self.records[completing].token;
            let output = junction.output;
            let target = self.junction_target(j);
            self.state.latches[j].clear();
            let fired = self.record(target, token, Action::JunctionFired, causes, Some(output));
            if target.stage == StageKind::Create {
                let attrs = self.token(token).attributes.clone();
                let minted = self.mint(target, &attrs, vec![fired], Some(output));
                acted.insert(minted);
            } else {
                self.release(target, &[fired], 1, &mut acted);
            }
        }

        if self.records.len() == start {
            return &[];
        }
        self.state.tick += 1;
        self.state.entries = self.placements(start);
        &self.records[start..]
    }

    fn admits(&self, policy: &Guard, token: u64) -> bool {
        let attrs = &self.token(token).attributes;
        let tick = (self.state.tick + 1) as i64;
        eval_guard(policy, attrs, &self.scenario.bindings, tick, &self.scenario.deadlines).unwrap_or(false)
    }

    fn junction_target(&self, junction: usize) -> StageRef {
        let output = self.model.junctions()[junction].output;
        match self.model.arc(output).and_then(|a| a.as_trigger()).map(|t| t.target) {
            Some(TriggerTarget::Stage(s)) => s,
            _ => unreachable!("validated junction output"),
        }
    }

    /// Moves up to `count` of the longest-waiting tokens that can flow into
    /// `target` (a Release stage) onto it.
    fn release(&mut self, target: StageRef, causes: &[usize], count: usize, acted: &mut BTreeSet<u64>) {
        let mut ready: Vec<(u64, u64, ArcId, StageRef)> = Vec::new();
        for token in self.state.live_tokens() {
            let Location::At(at) = token.location else { continue };
            if at.machine != target.machine || acted.contains(&token.id) {
                continue;
            }
            let arc = self.model.flow_arcs().find(|(_, f)| f.source == at && f.target == target);
            if let Some((arc, _)) = arc {
                ready.push((token.since, token.id, arc, at));
            }
        }
        ready.sort();
        for (_, token, arc, _) in ready.into_iter().take(count) {
            let mut all = causes.to_vec();
            all.push(self.token(token).last_record);
            let record = self.record(target, token, Action::Moved, all, Some(arc));
            self.place(token, target, record, false);
            acted.insert(token);
        }
    }
}

fn check_deadlines(guard: &Guard, kind: &crate::model::ThingKind, scenario: &Scenario) -> Result<(), SimError> {
    let mut names = Vec::new();
    guard.deadline_names(kind, &mut names);
    match names.into_iter().find(|n| !scenario.deadlines.contains_key(*n)) {
        Some(name) => Err(SimError::UnresolvedDeadline(name.to_string())),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::ClockOp;

    fn attrs(pairs: &[(&str, Value)]) -> BTreeMap<String, Value> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn guard_evaluation() {
        let g =
            Guard::equals("response", "accept").and(Guard::clock(ClockOp::Le, ClockBound::Named("deadline".into())));
        let token = attrs(&[("response", "accept".into())]);
        let deadlines = BTreeMap::from([("deadline".to_string(), 10)]);
        let none = BTreeMap::new();
        let no_deadlines = BTreeMap::new();
        assert_eq!(eval_guard(&g, &token, &none, 5, &deadlines), Ok(true));
        assert_eq!(eval_guard(&g, &token, &none, 11, &deadlines), Ok(false));
        let not = Guard::equals("x", "a").negate();
        assert_eq!(eval_guard(&not, &attrs(&[("x", "a".into())]), &none, 0, &no_deadlines), Ok(false));
        let bound = attrs(&[("x", "b".into())]);
        assert_eq!(eval_guard(&Guard::equals("x", "b"), &none, &bound, 0, &no_deadlines), Ok(true));
        assert_eq!(eval_guard(&g, &token, &none, 5, &no_deadlines), Err(UnresolvedName("deadline".into())));
    }

    const BOOK: &str = "thing book
sphere Shelf {
  machine Book of book { stages { Storage Release Transfer } }
}
flow Shelf.Book.Storage -> Shelf.Book.Release
flow Shelf.Book.Release -> Shelf.Book.Transfer
";

    #[test]
    fn init_places_tokens_and_checks_references() {
        let model = parse(BOOK).unwrap();
        let mut scenario = Scenario::default();
        scenario.initial_tokens.push(Scenario::token("Shelf.Book", StageKind::Storage));
        let sim = init(&model, &scenario).unwrap();
        assert_eq!(sim.tick(), 0);
        assert_eq!(sim.state().live_tokens().count(), 1);
        assert!(sim.state().latches.is_empty());

        let empty = init(&model, &Scenario::default()).unwrap();
        assert_eq!(empty.state().live_tokens().count(), 0);

        let mut bad = Scenario::default();
        bad.initial_tokens.push(Scenario::token("Shelf.Book", StageKind::Process));
        assert!(matches!(init(&model, &bad), Err(SimError::StageAbsent { .. })));
        bad.initial_tokens[0].machine = "Shelf.Pen".into();
        assert!(matches!(init(&model, &bad), Err(SimError::UnknownMachine(_))));
        let mut kind = scenario.clone();
        kind.initial_tokens[0].kind = Some("pen".into());
        assert!(matches!(init(&model, &kind), Err(SimError::KindMismatch { .. })));
        let zero = Scenario { max_ticks: 0, ..Scenario::default() };
        assert_eq!(init(&model, &zero).unwrap_err(), SimError::ZeroMaxTicks);
    }

    #[test]
    fn empty_scenario_is_quiescent_at_tick_zero() {
        let model = parse(BOOK).unwrap();
        let trace = run(&model, &Scenario::default()).unwrap();
        assert!(trace.is_empty());
        assert_eq!(trace.final_tick, 0);
        assert!(!trace.truncated);
    }

    #[test]
    fn max_ticks_truncates() {
        let model = parse(BOOK).unwrap();
        let mut scenario = Scenario { max_ticks: 1, ..Scenario::default() };
        scenario.initial_tokens.push(Scenario::token("Shelf.Book", StageKind::Storage));
        let trace = run(&model, &scenario).unwrap();
        assert!(trace.truncated);
        assert_eq!(trace.final_tick, 1);
        scenario.max_ticks = 3;
        let full = run(&model, &scenario).unwrap();
        assert!(!full.truncated);
        assert_eq!(full.last_tick(), Some(3));
    }

    const GATE: &str = "thing t
thing go
sphere S {
  machine A of go { stages { Create Process } }
  machine B of go { stages { Create Process } }
  machine Out of t { stages { Create Process } }
}
flow S.A.Create -> S.A.Process
flow S.B.Create -> S.B.Process
flow S.Out.Create -> S.Out.Process
junction J => S.Out.Create
trigger S.A.Process => junction J
trigger S.B.Process => junction J
";

    #[test]
    fn junction_waits_for_every_input() {
        let model = parse(GATE).unwrap();
        let mut scenario = Scenario::default();
        scenario.initial_tokens.push(Scenario::token("S.A", StageKind::Create));
        let mut sim = init(&model, &scenario).unwrap();
        while !sim.step().is_empty() {}
        assert_eq!(sim.state().latches[0].len(), 1);
        assert!(sim.records().iter().all(|r| r.action != Action::JunctionFired));

        scenario.initial_tokens.push(Scenario::token("S.B", StageKind::Create));
        let trace = run(&model, &scenario).unwrap();
        let fired: Vec<_> = trace.records.iter().filter(|r| r.action == Action::JunctionFired).collect();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].causes.len(), 2);
        assert!(trace.records.iter().any(|r| r.machine == "S.Out" && r.action == Action::Created));
    }

    const ACCEPT: &str = "thing parcel {
  size: small | large
}
sphere Post {
  machine Desk of parcel { stages { Arrive Accept Process } }
}
flow Post.Desk.Arrive -> Post.Desk.Accept
flow Post.Desk.Accept -> Post.Desk.Process
";

    #[test]
    fn accept_policy_rejects() {
        let model = parse(ACCEPT).unwrap();
        let mut scenario = Scenario::default();
        let mut small = Scenario::token("Post.Desk", StageKind::Arrive);
        small.attributes.insert("size".into(), "small".into());
        let mut large = small.clone();
        large.attributes.insert("size".into(), "large".into());
        scenario.initial_tokens = vec![small, large];
        scenario.accept_policy.insert("Post.Desk".into(), "size = small".into());
        let trace = run(&model, &scenario).unwrap();
        let at_accept: Vec<(u64, Action)> =
            trace.records.iter().filter(|r| r.stage == StageKind::Accept).map(|r| (r.token, r.action)).collect();
        assert_eq!(at_accept, [(1, Action::Accepted), (2, Action::Rejected)]);
        assert!(trace.records.iter().all(|r| r.token != 2 || r.tick <= 1));

        scenario.accept_policy.insert("Post.Desk".into(), "colour = red".into());
        assert!(matches!(init(&model, &scenario), Err(SimError::BadPolicy { .. })));
    }

    const FIFO: &str = "thing t
sphere S {
  machine M of t { stages { Create Process Release Transfer } }
  machine Go of t { stages { Create Process } }
}
flow S.M.Create -> S.M.Process
flow S.M.Process -> S.M.Release
flow S.Go.Create -> S.Go.Process
trigger S.Go.Process => S.M.Release
";

    #[test]
    fn release_trigger_takes_the_oldest_token() {
        let model = parse(FIFO).unwrap();
        let mut scenario = Scenario::default();
        scenario.initial_tokens.push(Scenario::token("S.M", StageKind::Process));
        scenario.initial_tokens.push(Scenario::token("S.M", StageKind::Create));
        scenario.initial_tokens.push(Scenario::token("S.Go", StageKind::Create));
        let trace = run(&model, &scenario).unwrap();
        let released: Vec<u64> = trace
            .records
            .iter()
            .filter(|r| r.stage == StageKind::Release && r.action == Action::Moved)
            .map(|r| r.token)
            .collect();
        assert_eq!(released, [1]);
        // Token 2 waits at Process because its Release only opens on a trigger.
        let last = trace.records.iter().rfind(|r| r.token == 2).unwrap();
        assert_eq!((last.stage, last.action), (StageKind::Process, Action::Moved));
    }

    #[test]
    fn unknown_deadline_is_an_init_error() {
        let model = parse(
            "thing t
sphere S {
  machine A of t { stages { Create Process } }
  machine B of t { stages { Create Process } }
}
flow S.A.Create -> S.A.Process
flow S.B.Create -> S.B.Process
trigger S.A.Process => S.B.Create when tick < due
",
        )
        .unwrap();
        assert_eq!(init(&model, &Scenario::default()).unwrap_err(), SimError::UnresolvedDeadline("due".into()));
        let mut scenario = Scenario::default();
        scenario.deadlines.insert("due".into(), 4);
        assert!(init(&model, &scenario).is_ok());
    }
}
