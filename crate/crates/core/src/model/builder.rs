use std::collections::BTreeSet;

use super::guard::{Guard, GuardIssue};
use super::stage::{is_legal_cross_flow, is_legal_intra_flow, StageKind};
use super::structure::*;
use super::thing::{Attribute, Domain, ThingKind};

/// Words the DSL reserves; they cannot name model elements.
pub const KEYWORDS: &[&str] = &[
    "thing", "sphere", "machine", "of", "stages", "flow", "trigger", "junction", "when", "and", "or", "not", "tick",
    "int",
];

/// Letters first, then letters, digits, `_` or `-`; keywords excluded.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') && !KEYWORDS.contains(&s)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("thing `{0}` is already declared")]
    DuplicateThing(String),
    #[error("attribute `{attribute}` is declared twice on thing `{thing}`")]
    DuplicateAttribute { thing: String, attribute: String },
    #[error("attribute `{attribute}` of thing `{thing}` has an empty or repeating symbol set")]
    BadDomain { thing: String, attribute: String },
    #[error("unknown sphere `{0}`")]
    UnknownSphere(String),
    #[error("`{name}` is already declared in sphere `{sphere}`")]
    DuplicateName { sphere: String, name: String },
    #[error("unknown thing `{0}`")]
    UnknownThing(String),
    #[error("stage {stage} listed twice in machine `{machine}`")]
    DuplicateStage { machine: String, stage: StageKind },
    #[error("machine `{0}` combines Receive with Arrive or Accept")]
    ReceiveMerge(String),
    #[error("endpoint `{0}` does not resolve to a stage")]
    DanglingEndpoint(Endpoint),
    #[error("flow {from} -> {target} is not a legal stage pair")]
    IllegalFlow { from: Endpoint, target: Endpoint },
    #[error("flow {from} -> {target} connects machines carrying different things")]
    KindMismatch { from: Endpoint, target: Endpoint },
    #[error("trigger target `{0}` must be a Create or Release stage")]
    IllegalTriggerTarget(Endpoint),
    #[error("unknown junction `{0}`")]
    UnknownJunction(String),
    #[error("junction `{0}` is already declared")]
    DuplicateJunction(String),
    #[error("guard on trigger from `{from}`: {issue}")]
    Guard { from: Endpoint, issue: GuardIssue },
}

/// Coarse classification of build errors, used to pick diagnostic codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuildErrorClass {
    Unresolved,
    Illegal,
    Duplicate,
}

impl BuildError {
    pub fn class(&self) -> BuildErrorClass {
        use BuildError::*;
        match self {
            UnknownSphere(_) | UnknownThing(_) | DanglingEndpoint(_) | UnknownJunction(_) => {
                BuildErrorClass::Unresolved
            }
            Guard { issue: GuardIssue::UnknownAttribute(_), .. } => BuildErrorClass::Unresolved,
            DuplicateThing(_)
            | DuplicateAttribute { .. }
            | DuplicateName { .. }
            | DuplicateStage { .. }
            | DuplicateJunction(_) => BuildErrorClass::Duplicate,
            InvalidIdentifier(_)
            | BadDomain { .. }
            | ReceiveMerge(_)
            | IllegalFlow { .. }
            | KindMismatch { .. }
            | IllegalTriggerTarget(_)
            | Guard { .. } => BuildErrorClass::Illegal,
        }
    }
}

/// Target of a trigger arc as named by callers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TriggerEnd {
    Stage(Endpoint),
    Junction(String),
}

/// Single-owner builder enforcing construction-time legality.
#[derive(Debug, Clone, Default)]
pub struct ModelBuilder {
    model: Model,
}

fn check_ident(name: &str) -> Result<(), BuildError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(BuildError::InvalidIdentifier(name.to_string()))
    }
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Read access to the model under construction.
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn build(self) -> Model {
        self.model
    }

    fn with_parts<R>(&mut self, f: impl FnOnce(&mut ModelParts) -> R) -> R {
        f(self.model.parts_mut())
    }

    pub fn add_thing(&mut self, name: &str, attributes: Vec<Attribute>) -> Result<ThingId, BuildError> {
        check_ident(name)?;
        if self.model.thing_by_name(name).is_some() {
            return Err(BuildError::DuplicateThing(name.to_string()));
        }
        let mut seen = BTreeSet::new();
        for attr in &attributes {
            check_ident(&attr.name)?;
            if !seen.insert(attr.name.as_str()) {
                return Err(BuildError::DuplicateAttribute { thing: name.to_string(), attribute: attr.name.clone() });
            }
            if let Domain::Symbols(symbols) = &attr.domain {
                let distinct: BTreeSet<_> = symbols.iter().collect();
                if symbols.is_empty() || distinct.len() != symbols.len() {
                    return Err(BuildError::BadDomain { thing: name.to_string(), attribute: attr.name.clone() });
                }
                for s in symbols {
                    check_ident(s)?;
                }
            }
        }
        let kind = ThingKind { name: name.to_string(), attributes };
        Ok(self.with_parts(|p| {
            p.things.push(kind);
            ThingId(p.things.len() - 1)
        }))
    }

    fn resolve_sphere_path<S: AsRef<str>>(&self, path: &[S]) -> Result<SphereId, BuildError> {
        self.model
            .resolve_sphere(path)
            .ok_or_else(|| BuildError::UnknownSphere(path.iter().map(|s| s.as_ref()).collect::<Vec<_>>().join(".")))
    }

    fn ensure_name_free(&self, sphere: SphereId, name: &str) -> Result<(), BuildError> {
        let s = &self.model.spheres()[sphere.0];
        let taken = s.items.iter().any(|item| match item {
            SphereItem::Sphere(c) => self.model.spheres()[c.0].name == name,
            SphereItem::Machine(m) => self.model.machines()[m.0].name == name,
        });
        if taken {
            Err(BuildError::DuplicateName { sphere: self.model.sphere_path(sphere).join("."), name: name.to_string() })
        } else {
            Ok(())
        }
    }

    /// Adds a sphere under `parent` (empty path = the root sphere).
    pub fn add_sphere<S: AsRef<str>>(&mut self, parent: &[S], name: &str) -> Result<SphereId, BuildError> {
        check_ident(name)?;
        let parent = self.resolve_sphere_path(parent)?;
        self.ensure_name_free(parent, name)?;
        Ok(self.with_parts(|p| {
            let id = SphereId(p.spheres.len());
            p.spheres.push(Sphere { name: name.to_string(), parent: Some(parent), items: Vec::new() });
            p.spheres[parent.0].items.push(SphereItem::Sphere(id));
            id
        }))
    }

    pub fn add_machine<S: AsRef<str>>(
        &mut self,
        sphere_path: &[S],
        name: &str,
        thing: &str,
        stages: &[StageKind],
    ) -> Result<MachineId, BuildError> {
        check_ident(name)?;
        let sphere = self.resolve_sphere_path(sphere_path)?;
        self.ensure_name_free(sphere, name)?;
        let kind = self.model.thing_by_name(thing).ok_or_else(|| BuildError::UnknownThing(thing.to_string()))?;
        let mut set = BTreeSet::new();
        for &stage in stages {
            if !set.insert(stage) {
                return Err(BuildError::DuplicateStage { machine: name.to_string(), stage });
            }
        }
        if set.contains(&StageKind::Receive) && (set.contains(&StageKind::Arrive) || set.contains(&StageKind::Accept)) {
            return Err(BuildError::ReceiveMerge(name.to_string()));
        }
        Ok(self.with_parts(|p| {
            let id = MachineId(p.machines.len());
            p.machines.push(Machine {
                name: name.to_string(),
                sphere,
                kind,
                stages: set.into_iter().collect(),
                subspheres: Vec::new(),
            });
            p.spheres[sphere.0].items.push(SphereItem::Machine(id));
            id
        }))
    }

    fn resolve(&self, endpoint: &Endpoint) -> Result<StageRef, BuildError> {
        self.model.resolve(endpoint).ok_or_else(|| BuildError::DanglingEndpoint(endpoint.clone()))
    }

    pub fn add_flow_arc(&mut self, source: &Endpoint, target: &Endpoint) -> Result<ArcId, BuildError> {
        let s = self.resolve(source)?;
        let t = self.resolve(target)?;
        let legal = if s.machine == t.machine {
            is_legal_intra_flow(s.stage, t.stage)
        } else {
            is_legal_cross_flow(s.stage, t.stage)
        };
        if !legal {
            return Err(BuildError::IllegalFlow { from: source.clone(), target: target.clone() });
        }
        if self.model.machines()[s.machine.0].kind != self.model.machines()[t.machine.0].kind {
            return Err(BuildError::KindMismatch { from: source.clone(), target: target.clone() });
        }
        Ok(self.push_arc(ModelArc::Flow(FlowArc { source: s, target: t })))
    }

    fn push_arc(&mut self, arc: ModelArc) -> ArcId {
        self.with_parts(|p| {
            p.arcs.push(arc);
            ArcId(p.arcs.len() - 1)
        })
    }

    fn junction_by_name(&self, name: &str) -> Option<JunctionId> {
        self.model.junctions().iter().position(|j| j.name == name).map(JunctionId)
    }

    fn trigger_stage_target(&self, endpoint: &Endpoint) -> Result<StageRef, BuildError> {
        let t = self.resolve(endpoint)?;
        if !t.stage.is_trigger_target() {
            return Err(BuildError::IllegalTriggerTarget(endpoint.clone()));
        }
        Ok(t)
    }

    pub fn add_trigger_arc(
        &mut self,
        source: &Endpoint,
        target: &TriggerEnd,
        guard: Option<Guard>,
    ) -> Result<ArcId, BuildError> {
        let s = self.resolve(source)?;
        let target = match target {
            TriggerEnd::Stage(e) => TriggerTarget::Stage(self.trigger_stage_target(e)?),
            TriggerEnd::Junction(name) => TriggerTarget::Junction(
                self.junction_by_name(name).ok_or_else(|| BuildError::UnknownJunction(name.clone()))?,
            ),
        };
        if let Some(g) = &guard {
            let kind = &self.model.things()[self.model.machines()[s.machine.0].kind.0];
            if let Some(issue) = g.check(kind).into_iter().next() {
                return Err(BuildError::Guard { from: source.clone(), issue });
            }
        }
        let arc = TriggerArc { source: TriggerSource::Stage(s), target, guard };
        let id = self.push_arc(ModelArc::Trigger(arc));
        if let TriggerTarget::Junction(j) = target {
            self.with_parts(|p| p.junctions[j.0].inputs.push(id));
        }
        Ok(id)
    }

    /// Declares a junction together with its output trigger arc.
    pub fn add_junction(&mut self, name: &str, output: &Endpoint) -> Result<JunctionId, BuildError> {
        check_ident(name)?;
        if self.junction_by_name(name).is_some() {
            return Err(BuildError::DuplicateJunction(name.to_string()));
        }
        let target = self.trigger_stage_target(output)?;
        let junction = JunctionId(self.model.junctions().len());
        Ok(self.with_parts(|p| {
            p.arcs.push(ModelArc::Trigger(TriggerArc {
                source: TriggerSource::Junction(junction),
                target: TriggerTarget::Stage(target),
                guard: None,
            }));
            let output = ArcId(p.arcs.len() - 1);
            p.junctions.push(Junction { name: name.to_string(), inputs: Vec::new(), output });
            junction
        }))
    }
}
