use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::guard::Guard;
use super::stage::StageKind;
use super::thing::ThingKind;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }
    };
}

id_type!(ThingId);
id_type!(
    /// `SphereId(0)` is always the unnamed root sphere.
    SphereId
);
id_type!(MachineId);
id_type!(
    /// Flow and trigger arcs share one id space; the id is the declaration order.
    ArcId
);
id_type!(JunctionId);

impl SphereId {
    pub const ROOT: SphereId = SphereId(0);
}

/// A resolved stage node: one stage of one machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StageRef {
    pub machine: MachineId,
    pub stage: StageKind,
}

impl StageRef {
    pub fn new(machine: MachineId, stage: StageKind) -> Self {
        StageRef { machine, stage }
    }
}

/// A stage named by path: `Sphere.Sub.Machine.Stage`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub sphere_path: Vec<String>,
    pub machine: String,
    pub stage: StageKind,
}

impl Endpoint {
    pub fn new<S: AsRef<str>>(sphere_path: &[S], machine: &str, stage: StageKind) -> Self {
        Endpoint {
            sphere_path: sphere_path.iter().map(|s| s.as_ref().to_string()).collect(),
            machine: machine.to_string(),
            stage,
        }
    }

    /// Dotted machine path without the stage.
    pub fn machine_path(&self) -> String {
        let mut out = self.sphere_path.join(".");
        if !out.is_empty() {
            out.push('.');
        }
        out.push_str(&self.machine);
        out
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.machine_path(), self.stage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{0}` is not a stage path (expected Sphere.Machine.Stage)")]
pub struct BadEndpoint(pub String);

impl FromStr for Endpoint {
    type Err = BadEndpoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
            return Err(BadEndpoint(s.to_string()));
        }
        let stage = parts[parts.len() - 1].parse().map_err(|_| BadEndpoint(s.to_string()))?;
        let machine = parts[parts.len() - 2];
        Ok(Endpoint::new(&parts[..parts.len() - 2], machine, stage))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SphereItem {
    Sphere(SphereId),
    Machine(MachineId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sphere {
    pub name: String,
    pub parent: Option<SphereId>,
    /// Child spheres and machines in declaration order.
    pub items: Vec<SphereItem>,
}

impl Sphere {
    pub fn children(&self) -> impl Iterator<Item = SphereId> + '_ {
        self.items.iter().filter_map(|i| match i {
            SphereItem::Sphere(s) => Some(*s),
            SphereItem::Machine(_) => None,
        })
    }

    pub fn machines(&self) -> impl Iterator<Item = MachineId> + '_ {
        self.items.iter().filter_map(|i| match i {
            SphereItem::Machine(m) => Some(*m),
            SphereItem::Sphere(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    pub name: String,
    pub sphere: SphereId,
    pub kind: ThingId,
    /// Canonically ordered when built through the builder.
    pub stages: Vec<StageKind>,
    /// Always empty in a legal model; kept so validation can report violations
    /// in models assembled from raw parts.
    pub subspheres: Vec<SphereId>,
}

impl Machine {
    pub fn has_stage(&self, stage: StageKind) -> bool {
        self.stages.contains(&stage)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowArc {
    pub source: StageRef,
    pub target: StageRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerSource {
    Stage(StageRef),
    Junction(JunctionId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TriggerTarget {
    Stage(StageRef),
    Junction(JunctionId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerArc {
    pub source: TriggerSource,
    pub target: TriggerTarget,
    pub guard: Option<Guard>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelArc {
    Flow(FlowArc),
    Trigger(TriggerArc),
}

impl ModelArc {
    pub fn as_flow(&self) -> Option<&FlowArc> {
        match self {
            ModelArc::Flow(f) => Some(f),
            ModelArc::Trigger(_) => None,
        }
    }

    pub fn as_trigger(&self) -> Option<&TriggerArc> {
        match self {
            ModelArc::Trigger(t) => Some(t),
            ModelArc::Flow(_) => None,
        }
    }
}

/// AND-synchronizer: fires its output trigger once every input has latched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Junction {
    pub name: String,
    pub inputs: Vec<ArcId>,
    /// Trigger arc whose source is this junction.
    pub output: ArcId,
}

/// The plain data of a model, with no invariants enforced.
///
/// Used to assemble deliberately broken models for validation.
#[derive(Debug, Clone, Default)]
pub struct ModelParts {
    pub things: Vec<ThingKind>,
    pub spheres: Vec<Sphere>,
    pub machines: Vec<Machine>,
    pub arcs: Vec<ModelArc>,
    pub junctions: Vec<Junction>,
}

/// An immutable FM model. Built through [`super::ModelBuilder`] or the DSL.
#[derive(Debug, Clone)]
pub struct Model {
    parts: ModelParts,
}

impl Default for Model {
    fn default() -> Self {
        Model::from_parts_unchecked(ModelParts {
            spheres: vec![Sphere { name: String::new(), parent: None, items: Vec::new() }],
            ..ModelParts::default()
        })
    }
}

impl Model {
    /// Wraps raw parts without checking any rule. A root sphere is added if
    /// `parts.spheres` is empty.
    pub fn from_parts_unchecked(mut parts: ModelParts) -> Self {
        if parts.spheres.is_empty() {
            parts.spheres.push(Sphere { name: String::new(), parent: None, items: Vec::new() });
        }
        Model { parts }
    }

    pub(super) fn parts_mut(&mut self) -> &mut ModelParts {
        &mut self.parts
    }

    pub fn to_parts(&self) -> ModelParts {
        self.parts.clone()
    }

    pub fn things(&self) -> &[ThingKind] {
        &self.parts.things
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.parts.spheres
    }

    pub fn machines(&self) -> &[Machine] {
        &self.parts.machines
    }

    pub fn arcs(&self) -> &[ModelArc] {
        &self.parts.arcs
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.parts.junctions
    }

    pub fn thing(&self, id: ThingId) -> Option<&ThingKind> {
        self.parts.things.get(id.0)
    }

    pub fn sphere(&self, id: SphereId) -> Option<&Sphere> {
        self.parts.spheres.get(id.0)
    }

    pub fn machine(&self, id: MachineId) -> Option<&Machine> {
        self.parts.machines.get(id.0)
    }

    pub fn arc(&self, id: ArcId) -> Option<&ModelArc> {
        self.parts.arcs.get(id.0)
    }

    pub fn junction(&self, id: JunctionId) -> Option<&Junction> {
        self.parts.junctions.get(id.0)
    }

    pub fn root(&self) -> &Sphere {
        &self.parts.spheres[0]
    }

    pub fn machine_ids(&self) -> impl Iterator<Item = MachineId> {
        (0..self.parts.machines.len()).map(MachineId)
    }

    pub fn arc_ids(&self) -> impl Iterator<Item = ArcId> {
        (0..self.parts.arcs.len()).map(ArcId)
    }

    pub fn flow_arcs(&self) -> impl Iterator<Item = (ArcId, &FlowArc)> {
        self.parts.arcs.iter().enumerate().filter_map(|(i, a)| a.as_flow().map(|f| (ArcId(i), f)))
    }

    pub fn trigger_arcs(&self) -> impl Iterator<Item = (ArcId, &TriggerArc)> {
        self.parts.arcs.iter().enumerate().filter_map(|(i, a)| a.as_trigger().map(|t| (ArcId(i), t)))
    }

    pub fn kind_of(&self, machine: MachineId) -> Option<&ThingKind> {
        self.machine(machine).and_then(|m| self.thing(m.kind))
    }

    pub fn thing_by_name(&self, name: &str) -> Option<ThingId> {
        self.parts.things.iter().position(|t| t.name == name).map(ThingId)
    }

    /// Names of the spheres from the root (exclusive) down to `id`.
    ///
    /// Walks parent links at most `spheres.len()` times, so a cyclic parent
    /// chain in a raw model yields a truncated path instead of looping.
    pub fn sphere_path(&self, id: SphereId) -> Vec<String> {
        let mut names = Vec::new();
        let mut cur = Some(id);
        let mut budget = self.parts.spheres.len();
        while let Some(sid) = cur {
            if sid == SphereId::ROOT || budget == 0 {
                break;
            }
            budget -= 1;
            match self.sphere(sid) {
                Some(s) => {
                    names.push(s.name.clone());
                    cur = s.parent;
                }
                None => break,
            }
        }
        names.reverse();
        names
    }

    /// Dotted path of a machine, e.g. `Recruiter.Offer`.
    pub fn machine_path(&self, id: MachineId) -> String {
        match self.machine(id) {
            Some(m) => {
                let mut path = self.sphere_path(m.sphere);
                path.push(m.name.clone());
                path.join(".")
            }
            None => format!("<machine {}>", id.0),
        }
    }

    pub fn machine_by_path(&self, path: &str) -> Option<MachineId> {
        self.machine_ids().find(|&id| self.machine_path(id) == path)
    }

    pub fn endpoint(&self, stage: StageRef) -> Option<Endpoint> {
        let m = self.machine(stage.machine)?;
        Some(Endpoint { sphere_path: self.sphere_path(m.sphere), machine: m.name.clone(), stage: stage.stage })
    }

    pub fn stage_label(&self, stage: StageRef) -> String {
        format!("{}.{}", self.machine_path(stage.machine), stage.stage)
    }

    /// Whether the stage exists in its machine.
    pub fn contains_stage(&self, stage: StageRef) -> bool {
        self.machine(stage.machine).is_some_and(|m| m.has_stage(stage.stage))
    }

    /// Finds a child sphere or machine by name under `sphere`.
    pub fn child_sphere(&self, sphere: SphereId, name: &str) -> Option<SphereId> {
        self.sphere(sphere)?.children().find(|c| self.sphere(*c).is_some_and(|s| s.name == name))
    }

    pub fn resolve_sphere<S: AsRef<str>>(&self, path: &[S]) -> Option<SphereId> {
        path.iter().try_fold(SphereId::ROOT, |cur, name| self.child_sphere(cur, name.as_ref()))
    }

    pub fn resolve_machine(&self, endpoint: &Endpoint) -> Option<MachineId> {
        let sphere = self.resolve_sphere(&endpoint.sphere_path)?;
        self.sphere(sphere)?.machines().find(|m| self.machine(*m).is_some_and(|mm| mm.name == endpoint.machine))
    }

    /// Resolves an endpoint to an existing stage node.
    pub fn resolve(&self, endpoint: &Endpoint) -> Option<StageRef> {
        let machine = self.resolve_machine(endpoint)?;
        let stage = StageRef::new(machine, endpoint.stage);
        self.contains_stage(stage).then_some(stage)
    }

    /// All stage nodes in machine order, stages in canonical order.
    pub fn stage_refs(&self) -> Vec<StageRef> {
        let mut out = Vec::new();
        for id in self.machine_ids() {
            let m = &self.parts.machines[id.0];
            let mut stages = m.stages.clone();
            stages.sort();
            stages.dedup();
            out.extend(stages.into_iter().map(|s| StageRef::new(id, s)));
        }
        out
    }

    /// Trigger arcs (direct or via a junction output) that activate `stage`.
    pub fn is_trigger_target(&self, stage: StageRef) -> bool {
        self.trigger_arcs().any(|(_, t)| t.target == TriggerTarget::Stage(stage))
    }

    pub fn is_empty(&self) -> bool {
        self.parts.things.is_empty()
            && self.parts.machines.is_empty()
            && self.parts.arcs.is_empty()
            && self.parts.junctions.is_empty()
            && self.parts.spheres.len() <= 1
    }

    /// Name-based normal form used for structural equality.
    fn shape(&self) -> Shape {
        let stage_name = |s: StageRef| self.stage_label(s);
        let junction_name = |j: JunctionId| self.junction(j).map(|j| j.name.clone()).unwrap_or_default();
        let spheres = (0..self.parts.spheres.len())
            .map(|i| {
                let id = SphereId(i);
                let items = self.parts.spheres[i]
                    .items
                    .iter()
                    .map(|item| match item {
                        SphereItem::Sphere(s) => format!("sphere {}", self.sphere_path(*s).join(".")),
                        SphereItem::Machine(m) => format!("machine {}", self.machine_path(*m)),
                    })
                    .collect();
                (self.sphere_path(id).join("."), items)
            })
            .collect();
        let machines = self
            .machine_ids()
            .map(|id| {
                let m = &self.parts.machines[id.0];
                let kind = self.thing(m.kind).map(|t| t.name.clone()).unwrap_or_default();
                let mut stages = m.stages.clone();
                stages.sort();
                (self.machine_path(id), (kind, stages, m.subspheres.len()))
            })
            .collect();
        let arcs = self
            .parts
            .arcs
            .iter()
            .map(|arc| match arc {
                ModelArc::Flow(f) => format!("flow {} -> {}", stage_name(f.source), stage_name(f.target)),
                ModelArc::Trigger(t) => {
                    let source = match t.source {
                        TriggerSource::Stage(s) => stage_name(s),
                        TriggerSource::Junction(j) => format!("junction {}", junction_name(j)),
                    };
                    let target = match t.target {
                        TriggerTarget::Stage(s) => stage_name(s),
                        TriggerTarget::Junction(j) => format!("junction {}", junction_name(j)),
                    };
                    let guard = t.guard.as_ref().map(|g| format!("{g:?}")).unwrap_or_default();
                    format!("trigger {source} => {target} {guard}")
                }
            })
            .collect();
        let junctions = self.parts.junctions.iter().map(|j| (j.name.clone(), (j.inputs.clone(), j.output))).collect();
        Shape { things: self.parts.things.clone(), spheres, machines, arcs, junctions }
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Shape {
    things: Vec<ThingKind>,
    spheres: BTreeMap<String, Vec<String>>,
    machines: BTreeMap<String, (String, Vec<StageKind>, usize)>,
    arcs: Vec<String>,
    junctions: BTreeMap<String, (Vec<ArcId>, ArcId)>,
}

/// Structural equality: same things, sphere tree, machines, arcs (in order)
/// and junctions, compared by name rather than by internal id.
impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }
}

impl Eq for Model {}
