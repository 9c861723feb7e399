//! The FM domain model: spheres, machines, stages, arcs and thing kinds.

mod builder;
mod graph;
mod guard;
mod stage;
mod structure;
mod thing;

pub use builder::{is_identifier, BuildError, BuildErrorClass, ModelBuilder, TriggerEnd, KEYWORDS};
pub use graph::{stage_graph, EdgeKind, GraphEdge, GraphNode, StageGraph};
pub use guard::{ClockBound, ClockOp, Guard, GuardIssue, CLOCK};
pub use stage::{is_legal_cross_flow, is_legal_intra_flow, StageKind, UnknownStage};
pub use structure::{
    ArcId, BadEndpoint, Endpoint, FlowArc, Junction, JunctionId, Machine, MachineId, Model, ModelArc, ModelParts,
    Sphere, SphereId, SphereItem, StageRef, ThingId, TriggerArc, TriggerSource, TriggerTarget,
};
pub use thing::{Attribute, Domain, ThingKind, Value};
