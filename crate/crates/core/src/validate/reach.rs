use std::collections::{BTreeSet, VecDeque};

use crate::model::{stage_graph, Endpoint, Model, StageGraph, StageKind, StageRef};

/// Stages reachable from `origin` over solid flow arcs; always contains the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachabilitySet {
    pub origin: StageRef,
    pub reached: BTreeSet<StageRef>,
}

impl ReachabilitySet {
    pub fn contains(&self, stage: StageRef) -> bool {
        self.reached.contains(&stage)
    }

    pub fn endpoints(&self, model: &Model) -> Vec<Endpoint> {
        self.reached.iter().filter_map(|s| model.endpoint(*s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("origin `{0}` does not resolve to a stage")]
pub struct UnresolvedOrigin(pub Endpoint);

pub fn reachable_stages(model: &Model, origin: &Endpoint) -> Result<ReachabilitySet, UnresolvedOrigin> {
    let stage = model.resolve(origin).ok_or_else(|| UnresolvedOrigin(origin.clone()))?;
    Ok(reachable_from(&stage_graph(model), stage))
}

/// Breadth-first closure over flow edges of a prebuilt graph.
pub fn reachable_from(graph: &StageGraph, origin: StageRef) -> ReachabilitySet {
    let mut reached = BTreeSet::from([origin]);
    let mut queue = VecDeque::from([origin]);
    while let Some(stage) = queue.pop_front() {
        for next in graph.flow_successors(stage) {
            if reached.insert(next) {
                queue.push_back(next);
            }
        }
    }
    ReachabilitySet { origin, reached }
}

/// Stages where things can enter a flow: Create, Storage, and Transfer
/// stages that no flow arc feeds, which receive from outside the model.
pub fn flow_origins(model: &Model) -> Vec<StageRef> {
    let fed: BTreeSet<StageRef> = model.flow_arcs().map(|(_, f)| f.target).collect();
    model
        .stage_refs()
        .into_iter()
        .filter(|s| match s.stage {
            StageKind::Create | StageKind::Storage => true,
            StageKind::Transfer => !fed.contains(s),
            _ => false,
        })
        .collect()
}

/// Non-Storage stages that no flow origin reaches.
pub fn dead_stages(model: &Model) -> BTreeSet<StageRef> {
    let graph = stage_graph(model);
    let mut live = BTreeSet::new();
    for origin in flow_origins(model) {
        live.extend(reachable_from(&graph, origin).reached);
    }
    model.stage_refs().into_iter().filter(|s| s.stage != StageKind::Storage && !live.contains(s)).collect()
}
