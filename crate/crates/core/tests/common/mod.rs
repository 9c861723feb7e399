//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use flowkit::corpus::{corpus, CorpusEntry, CorpusScenario};
use flowkit::dsl::parse;
use flowkit::model::{Attribute, ClockBound, ClockOp, Guard, MachineId, ModelArc, ModelBuilder, StageRef, TriggerEnd};
use flowkit::sim::{Action, EventTrace, Scenario, Simulation};
use flowkit::{Endpoint, Model, StageKind};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn corpus_models() -> Vec<(&'static CorpusEntry, Model)> {
    corpus().iter().map(|e| (e, parse(e.source).expect(e.name))).collect()
}

pub fn corpus_runs() -> Vec<(&'static CorpusEntry, &'static CorpusScenario, Model)> {
    let mut out = Vec::new();
    for (entry, model) in corpus_models() {
        for s in entry.scenarios {
            out.push((entry, s, model.clone()));
        }
    }
    out
}

fn random_stages(rng: &mut impl Rng, budget: usize) -> Vec<StageKind> {
    let mut stages: Vec<StageKind> = StageKind::ALL.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    if stages.contains(&StageKind::Receive) && rng.gen_bool(0.5) {
        stages.retain(|s| !matches!(s, StageKind::Arrive | StageKind::Accept));
    } else {
        stages.retain(|s| *s != StageKind::Receive);
    }
    if stages.is_empty() {
        stages.push(*StageKind::ALL.choose(rng).unwrap());
    }
    stages.shuffle(rng);
    stages.truncate(budget.max(1));
    stages
}

fn random_guard(rng: &mut impl Rng, depth: u32) -> Guard {
    match rng.gen_range(0..if depth == 0 { 2 } else { 5 }) {
        0 => Guard::equals("colour", *["red", "blue"].choose(rng).unwrap()),
        1 => {
            let op = *[ClockOp::Lt, ClockOp::Le, ClockOp::Gt, ClockOp::Ge].choose(rng).unwrap();
            if rng.gen_bool(0.5) {
                Guard::clock(op, ClockBound::Literal(rng.gen_range(0..20)))
            } else {
                Guard::clock(op, ClockBound::Named("size".into()))
            }
        }
        2 => random_guard(rng, depth - 1).and(random_guard(rng, depth - 1)),
        3 => random_guard(rng, depth - 1).or(random_guard(rng, depth - 1)),
        _ => random_guard(rng, depth - 1).negate(),
    }
}

/// A random well-formed model with at most `max_stages` stages, with flows,
/// guarded triggers and (sometimes) junctions.
pub fn random_model(rng: &mut impl Rng, max_stages: usize) -> Model {
    let mut b = ModelBuilder::new();
    b.add_thing("item", vec![Attribute::symbols("colour", &["red", "blue"]), Attribute::integer("size")]).unwrap();
    b.add_thing("other", vec![]).unwrap();
    let mut spheres: Vec<Vec<String>> = vec![vec![]];
    for i in 0..rng.gen_range(1..4) {
        let parent = spheres.choose(rng).unwrap().clone();
        let name = format!("S{i}");
        b.add_sphere(&parent, &name).unwrap();
        let mut path = parent;
        path.push(name);
        spheres.push(path);
    }
    let mut budget = max_stages;
    let mut machines = 0;
    while budget > 0 && machines < 5 {
        let stages = random_stages(rng, budget.min(5));
        budget -= stages.len();
        let sphere = spheres[1..].choose(rng).unwrap().clone();
        let thing = if rng.gen_bool(0.8) { "item" } else { "other" };
        b.add_machine(&sphere, &format!("M{machines}"), thing, &stages).unwrap();
        machines += 1;
    }
    let model = b.model().clone();
    let stages: Vec<Endpoint> = model.stage_refs().into_iter().filter_map(|s| model.endpoint(s)).collect();
    for _ in 0..rng.gen_range(0..stages.len() * 3 + 1) {
        let s = stages.choose(rng).unwrap();
        let t = stages.choose(rng).unwrap();
        let _ = b.add_flow_arc(s, t);
    }
    if rng.gen_bool(0.3) {
        if let Some(out) = stages.iter().find(|e| e.stage.is_trigger_target()) {
            let _ = b.add_junction("J", out);
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let s = stages.choose(rng).unwrap();
        let target = if b.model().junctions().is_empty() || rng.gen_bool(0.6) {
            TriggerEnd::Stage(stages.choose(rng).unwrap().clone())
        } else {
            TriggerEnd::Junction("J".into())
        };
        let guard = rng.gen_bool(0.5).then(|| random_guard(rng, 2));
        let _ = b.add_trigger_arc(s, &target, guard);
    }
    b.build()
}

/// Initial tokens at random stages of a model.
pub fn random_scenario(rng: &mut impl Rng, model: &Model) -> Scenario {
    let stages = model.stage_refs();
    let mut scenario = Scenario { max_ticks: 30, ..Scenario::default() };
    if stages.is_empty() {
        return scenario;
    }
    for _ in 0..rng.gen_range(0..4) {
        let s = *stages.choose(rng).unwrap();
        scenario.initial_tokens.push(Scenario::token(&model.machine_path(s.machine), s.stage));
    }
    if rng.gen_bool(0.5) {
        for m in model.machine_ids() {
            if model.machines()[m.0].has_stage(StageKind::Accept) && model.kind_of(m).unwrap().name == "item" {
                scenario.accept_policy.insert(model.machine_path(m), "colour = red".into());
            }
        }
    }
    scenario
}

/// Reachability by naive fixpoint over the raw arc list.
pub fn reach_oracle(model: &Model, origin: StageRef) -> BTreeSet<StageRef> {
    let mut reached = BTreeSet::from([origin]);
    loop {
        let before = reached.len();
        for arc in model.arcs() {
            if let ModelArc::Flow(f) = arc {
                if reached.contains(&f.source) && model.contains_stage(f.target) {
                    reached.insert(f.target);
                }
            }
        }
        if reached.len() == before {
            return reached;
        }
    }
}

/// Complement of everything reachable from Create, Storage and unfed
/// Transfer stages, excluding Storage.
pub fn dead_oracle(model: &Model) -> BTreeSet<StageRef> {
    let mut all = BTreeSet::new();
    for (i, m) in model.machines().iter().enumerate() {
        for &s in &m.stages {
            all.insert(StageRef::new(MachineId(i), s));
        }
    }
    let fed: BTreeSet<StageRef> = model.arcs().iter().filter_map(|a| a.as_flow()).map(|f| f.target).collect();
    let mut live = BTreeSet::new();
    for &s in &all {
        let origin = match s.stage {
            StageKind::Create | StageKind::Storage => true,
            StageKind::Transfer => !fed.contains(&s),
            _ => false,
        };
        if origin {
            live.extend(reach_oracle(model, s));
        }
    }
    all.into_iter().filter(|s| s.stage != StageKind::Storage && !live.contains(s)).collect()
}

/// Steps a simulation and checks, per tick, that the live-token count changes
/// by exactly created minus (consumed + rejected).
pub fn check_conservation(model: &Model, scenario: &Scenario) -> Result<(), String> {
    let mut sim = Simulation::new(model, scenario.clone()).map_err(|e| e.to_string())?;
    let initial = sim.records().len();
    let mut live = sim.state().live_tokens().count() as i64;
    if live != initial as i64 {
        return Err(format!("{live} live tokens after {initial} initial records"));
    }
    while sim.tick() < scenario.max_ticks {
        let records = sim.step();
        if records.is_empty() {
            break;
        }
        let (created, removed) = records.iter().fold((0i64, 0i64), |(c, r), rec| match rec.action {
            Action::Created => (c + 1, r),
            Action::Consumed | Action::Rejected => (c, r + 1),
            _ => (c, r),
        });
        let now = sim.state().live_tokens().count() as i64;
        if now - live != created - removed {
            return Err(format!("tick {}: live {live} -> {now}, created {created}, removed {removed}", sim.tick()));
        }
        live = now;
    }
    Ok(())
}

/// No token is placed at two locations within one tick.
pub fn check_exclusivity(trace: &EventTrace) -> Result<(), String> {
    let mut seen: BTreeMap<(u64, u64), (String, StageKind)> = BTreeMap::new();
    for r in &trace.records {
        if !matches!(r.action, Action::Created | Action::Moved | Action::Stored | Action::Accepted) {
            continue;
        }
        let here = (r.machine.clone(), r.stage);
        if let Some(prev) = seen.insert((r.tick, r.token), here.clone()) {
            return Err(format!("tick {}: token {} placed at {prev:?} and {here:?}", r.tick, r.token));
        }
    }
    Ok(())
}

/// Junction firings never outnumber any input's latches, and every input
/// latches again between two firings.
pub fn check_junctions(model: &Model, trace: &EventTrace) -> Result<(), String> {
    for junction in model.junctions() {
        let mut pending: BTreeSet<_> = BTreeSet::new();
        let mut fired = 0;
        let mut latches: BTreeMap<_, usize> = BTreeMap::new();
        for r in &trace.records {
            match (r.action, r.arc) {
                (Action::Triggered, Some(a)) if junction.inputs.contains(&a) => {
                    pending.insert(a);
                    *latches.entry(a).or_default() += 1;
                }
                (Action::JunctionFired, Some(a)) if a == junction.output => {
                    if junction.inputs.iter().any(|i| !pending.contains(i)) {
                        return Err(format!("junction {} fired without all inputs", junction.name));
                    }
                    pending.clear();
                    fired += 1;
                }
                _ => {}
            }
        }
        let min = junction.inputs.iter().map(|i| latches.get(i).copied().unwrap_or(0)).min().unwrap_or(0);
        if fired > min {
            return Err(format!("junction {} fired {fired} times with {min} latches", junction.name));
        }
    }
    Ok(())
}

/// Records with action `moved` always follow a flow arc.
pub fn check_moves_follow_flows(model: &Model, trace: &EventTrace) -> Result<(), String> {
    for (i, r) in trace.records.iter().enumerate() {
        if r.action == Action::Moved {
            match r.arc.and_then(|a| model.arc(a)) {
                Some(ModelArc::Flow(_)) => {}
                other => return Err(format!("record {i} moved via {other:?}")),
            }
        }
    }
    Ok(())
}

/// One model per diagnostic code, each the clean book model with a single
/// injected violation, with the subject the diagnostic must name.
pub fn injections() -> Vec<(flowkit::validate::Code, flowkit::validate::Subject, Model)> {
    use flowkit::model::{ArcId, FlowArc, Junction, JunctionId, SphereId, TriggerArc, TriggerSource, TriggerTarget};
    use flowkit::validate::{Code, Subject};

    let base = parse(flowkit::corpus::find("book").unwrap().source).unwrap();
    let shelf = MachineId(0);
    let librarian = MachineId(1);
    let borrower = MachineId(2);
    let at = StageRef::new;
    let next_arc = ArcId(base.arcs().len());
    let inject = |f: &dyn Fn(&mut flowkit::model::ModelParts)| {
        let mut parts = base.to_parts();
        f(&mut parts);
        Model::from_parts_unchecked(parts)
    };
    let trigger = |source, target, guard| ModelArc::Trigger(TriggerArc { source, target, guard });
    vec![
        (Code::E001, Subject::Machine(librarian), inject(&|p| p.machines[1].stages.push(StageKind::Receive))),
        (
            Code::E002,
            Subject::Arc(next_arc),
            inject(&|p| {
                p.arcs.push(ModelArc::Flow(FlowArc {
                    source: at(shelf, StageKind::Storage),
                    target: at(librarian, StageKind::Receive),
                }))
            }),
        ),
        (Code::E003, Subject::Machine(borrower), inject(&|p| p.machines[2].subspheres.push(SphereId(1)))),
        (
            Code::E004,
            Subject::Arc(next_arc),
            inject(&|p| {
                p.arcs.push(ModelArc::Flow(FlowArc {
                    source: at(shelf, StageKind::Release),
                    target: at(MachineId(9), StageKind::Process),
                }))
            }),
        ),
        (
            Code::E005,
            Subject::Machine(librarian),
            inject(&|p| {
                p.machines[1].stages.insert(0, StageKind::Arrive);
                p.arcs.push(ModelArc::Flow(FlowArc {
                    source: at(librarian, StageKind::Transfer),
                    target: at(librarian, StageKind::Arrive),
                }));
            }),
        ),
        (
            Code::E006,
            Subject::Sphere(SphereId(1)),
            inject(&|p| {
                p.spheres[1].parent = Some(SphereId(2));
                p.spheres[2].parent = Some(SphereId(1));
            }),
        ),
        (
            Code::E007,
            Subject::Arc(next_arc),
            inject(&|p| {
                p.arcs.push(trigger(
                    TriggerSource::Stage(at(shelf, StageKind::Storage)),
                    TriggerTarget::Stage(at(librarian, StageKind::Transfer)),
                    None,
                ))
            }),
        ),
        (
            Code::E008,
            Subject::Junction(JunctionId(0)),
            inject(&|p| {
                p.arcs.push(trigger(
                    TriggerSource::Junction(JunctionId(0)),
                    TriggerTarget::Stage(at(librarian, StageKind::Release)),
                    None,
                ));
                p.arcs.push(trigger(
                    TriggerSource::Stage(at(shelf, StageKind::Release)),
                    TriggerTarget::Junction(JunctionId(0)),
                    None,
                ));
                p.junctions.push(Junction { name: "J".into(), inputs: vec![ArcId(next_arc.0 + 1)], output: next_arc });
            }),
        ),
        (
            Code::E009,
            Subject::Arc(next_arc),
            inject(&|p| {
                p.arcs.push(trigger(
                    TriggerSource::Stage(at(shelf, StageKind::Release)),
                    TriggerTarget::Stage(at(librarian, StageKind::Release)),
                    Some(Guard::equals("colour", "red")),
                ))
            }),
        ),
        (
            Code::W001,
            Subject::Stage(at(borrower, StageKind::Process)),
            inject(&|p| p.machines[2].stages.push(StageKind::Process)),
        ),
        (
            Code::W002,
            Subject::Stage(at(librarian, StageKind::Storage)),
            inject(&|p| p.machines[1].stages.push(StageKind::Storage)),
        ),
    ]
}
