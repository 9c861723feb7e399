use std::collections::BTreeMap;

use super::structure::*;

/// A node of the stage graph: a stage or a junction bar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GraphNode {
    Stage(StageRef),
    Junction(JunctionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    /// Solid arrow; carries a thing.
    Flow,
    /// Dashed arrow; carries no thing.
    Trigger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphEdge {
    pub arc: ArcId,
    pub kind: EdgeKind,
    pub target: GraphNode,
}

/// Adjacency over stage nodes and junctions; each model arc is one edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageGraph {
    adjacency: BTreeMap<GraphNode, Vec<GraphEdge>>,
}

impl StageGraph {
    pub fn successors(&self, node: GraphNode) -> &[GraphEdge] {
        self.adjacency.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Successors along solid flow arcs only.
    pub fn flow_successors(&self, stage: StageRef) -> impl Iterator<Item = StageRef> + '_ {
        self.successors(GraphNode::Stage(stage)).iter().filter_map(|e| match (e.kind, e.target) {
            (EdgeKind::Flow, GraphNode::Stage(s)) => Some(s),
            _ => None,
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = (GraphNode, &GraphEdge)> {
        self.adjacency.iter().flat_map(|(n, es)| es.iter().map(move |e| (*n, e)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }
}

/// Builds the stage graph. Arcs whose endpoints do not resolve are skipped.
pub fn stage_graph(model: &Model) -> StageGraph {
    let mut adjacency: BTreeMap<GraphNode, Vec<GraphEdge>> = BTreeMap::new();
    for stage in model.stage_refs() {
        adjacency.entry(GraphNode::Stage(stage)).or_default();
    }
    for j in 0..model.junctions().len() {
        adjacency.entry(GraphNode::Junction(JunctionId(j))).or_default();
    }
    let valid = |n: &GraphNode| match n {
        GraphNode::Stage(s) => model.contains_stage(*s),
        GraphNode::Junction(j) => model.junction(*j).is_some(),
    };
    for (i, arc) in model.arcs().iter().enumerate() {
        let (from, kind, to) = match arc {
            ModelArc::Flow(f) => (GraphNode::Stage(f.source), EdgeKind::Flow, GraphNode::Stage(f.target)),
            ModelArc::Trigger(t) => {
                let from = match t.source {
                    TriggerSource::Stage(s) => GraphNode::Stage(s),
                    TriggerSource::Junction(j) => GraphNode::Junction(j),
                };
                let to = match t.target {
                    TriggerTarget::Stage(s) => GraphNode::Stage(s),
                    TriggerTarget::Junction(j) => GraphNode::Junction(j),
                };
                (from, EdgeKind::Trigger, to)
            }
        };
        if valid(&from) && valid(&to) {
            adjacency.entry(from).or_default().push(GraphEdge { arc: ArcId(i), kind, target: to });
        }
    }
    StageGraph { adjacency }
}
