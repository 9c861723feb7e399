use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::model::Model;

use super::trace::EventTrace;

/// A maximal run of consecutive ticks during which one machine is active.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Event {
    pub machine: String,
    pub start_tick: u64,
    pub end_tick: u64,
    /// Indices into the trace, in trace order.
    pub records: Vec<usize>,
}

/// Events of a run and the causal order between them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Process {
    /// Ordered by start tick, then by first record.
    pub events: Vec<Event>,
    /// `(a, b)`: a record in event `a` caused a record in event `b`.
    pub causal_order: BTreeSet<(usize, usize)>,
    /// Event index of every trace record.
    #[serde(skip)]
    pub record_event: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("record {index} refers to unknown machine `{machine}`")]
    UnknownMachine { index: usize, machine: String },
    #[error("record {index} names a cause that does not precede it")]
    BadCause { index: usize },
}

pub fn extract_events(trace: &EventTrace, model: &Model) -> Result<Process, EventError> {
    let mut by_machine: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (index, record) in trace.records.iter().enumerate() {
        if model.machine_by_path(&record.machine).is_none() {
            return Err(EventError::UnknownMachine { index, machine: record.machine.clone() });
        }
        if record.causes.iter().any(|&c| c >= index) {
            return Err(EventError::BadCause { index });
        }
        by_machine.entry(&record.machine).or_default().push(index);
    }

    let mut events = Vec::new();
    for (machine, indices) in by_machine {
        let mut current: Option<Event> = None;
        for index in indices {
            let tick = trace.records[index].tick;
            match &mut current {
                Some(e) if tick <= e.end_tick + 1 => {
                    e.end_tick = tick;
                    e.records.push(index);
                }
                _ => {
                    events.extend(current.take());
                    current = Some(Event {
                        machine: machine.to_string(),
                        start_tick: tick,
                        end_tick: tick,
                        records: vec![index],
                    });
                }
            }
        }
        events.extend(current);
    }
    events.sort_by_key(|e| (e.start_tick, e.records[0]));

    let mut record_event = vec![0; trace.records.len()];
    for (i, e) in events.iter().enumerate() {
        for &r in &e.records {
            record_event[r] = i;
        }
    }
    let mut causal_order = BTreeSet::new();
    for (index, record) in trace.records.iter().enumerate() {
        for &cause in &record.causes {
            let (a, b) = (record_event[cause], record_event[index]);
            if a != b {
                causal_order.insert((a, b));
            }
        }
    }
    Ok(Process { events, causal_order, record_event })
}

impl Process {
    pub fn successors(&self, event: usize) -> impl Iterator<Item = usize> + '_ {
        self.causal_order.range((event, 0)..(event + 1, 0)).map(|&(_, b)| b)
    }

    /// Whether `a` strictly precedes `b` in the transitive causal order.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        let mut seen = BTreeSet::new();
        let mut stack = vec![a];
        while let Some(e) = stack.pop() {
            for next in self.successors(e) {
                if next == b {
                    return true;
                }
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        false
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Kahn order of all events, or `None` if the causal order has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.events.len();
        let mut indegree = vec![0usize; n];
        for &(_, b) in &self.causal_order {
            indegree[b] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&e| indegree[e] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(e) = ready.pop_first() {
            order.push(e);
            for next in self.successors(e) {
                indegree[next] -= 1;
                if indegree[next] == 0 {
                    ready.insert(next);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    pub fn events_of<'a>(&'a self, machine: &'a str) -> impl Iterator<Item = (usize, &'a Event)> + 'a {
        self.events.iter().enumerate().filter(move |(_, e)| e.machine == machine)
    }
}

/// Whether record `a` is a transitive cause of record `b`.
pub fn record_precedes(trace: &EventTrace, a: usize, b: usize) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = vec![b];
    while let Some(r) = stack.pop() {
        for &c in &trace.records[r].causes {
            if c == a {
                return true;
            }
            if c > a && seen.insert(c) {
                stack.push(c);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::model::StageKind;
    use crate::sim::{run, Action, Scenario, TraceRecord};

    fn record(tick: u64, machine: &str, causes: Vec<usize>) -> TraceRecord {
        TraceRecord {
            tick,
            machine: machine.into(),
            stage: StageKind::Create,
            token: 1,
            action: Action::Created,
            causes,
            arc: None,
        }
    }

    fn model() -> Model {
        parse(
            "thing t\nsphere S {\n  machine A of t { stages { Create } }\n  machine B of t { stages { Create } }\n}\n",
        )
        .unwrap()
    }

    #[test]
    fn empty_trace_has_no_events() {
        let process = extract_events(&EventTrace::default(), &model()).unwrap();
        assert!(process.events.is_empty());
        assert!(process.is_acyclic());
    }

    #[test]
    fn gaps_split_events() {
        let trace = EventTrace {
            records: vec![record(0, "S.A", vec![]), record(1, "S.A", vec![0]), record(3, "S.A", vec![1])],
            ..EventTrace::default()
        };
        let process = extract_events(&trace, &model()).unwrap();
        let spans: Vec<(u64, u64)> = process.events.iter().map(|e| (e.start_tick, e.end_tick)).collect();
        assert_eq!(spans, [(0, 1), (3, 3)]);
        assert_eq!(process.causal_order, BTreeSet::from([(0, 1)]));
        assert!(process.precedes(0, 1));
        assert!(!process.precedes(1, 0));
    }

    #[test]
    fn unknown_machine_is_an_error() {
        let trace = EventTrace { records: vec![record(0, "S.C", vec![])], ..EventTrace::default() };
        assert!(matches!(extract_events(&trace, &model()), Err(EventError::UnknownMachine { .. })));
    }

    #[test]
    fn two_bursts_in_one_machine() {
        let model = parse(
            "thing t
sphere S {
  machine A of t { stages { Create Process } }
  machine Go of t { stages { Create Process Release Transfer } }
}
flow S.A.Create -> S.A.Process
flow S.Go.Create -> S.Go.Process
flow S.Go.Process -> S.Go.Release
flow S.Go.Release -> S.Go.Transfer
trigger S.Go.Transfer => S.A.Create
",
        )
        .unwrap();
        let mut scenario = Scenario::default();
        scenario.initial_tokens.push(Scenario::token("S.A", StageKind::Create));
        scenario.initial_tokens.push(Scenario::token("S.Go", StageKind::Create));
        let trace = run(&model, &scenario).unwrap();
        let process = extract_events(&trace, &model).unwrap();
        let a: Vec<(u64, u64)> = process.events_of("S.A").map(|(_, e)| (e.start_tick, e.end_tick)).collect();
        assert_eq!(a, [(0, 2), (4, 6)]);
        let go: Vec<usize> = process.events_of("S.Go").map(|(i, _)| i).collect();
        let second_a = process.events_of("S.A").nth(1).unwrap().0;
        assert!(process.precedes(go[0], second_a));
        assert!(process.is_acyclic());
    }
}
