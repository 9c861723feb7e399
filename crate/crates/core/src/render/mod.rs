//! Graphviz DOT output for models and trace snapshots.
//!
//! Spheres become nested clusters and machines boxed subclusters. Flow arcs
//! are solid, trigger arcs dashed, Storage is a cylinder and a junction is a
//! filled black bar. Every edge ends with a `// arc N` comment naming the
//! model arc it draws.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use crate::model::{Model, ModelArc, SphereId, SphereItem, StageKind, StageRef, TriggerSource, TriggerTarget};
use crate::sim::EventTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankDir {
    #[default]
    LR,
    TB,
}

impl fmt::Display for RankDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankDir::LR => "LR",
            RankDir::TB => "TB",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Draw sphere clusters; machines are always boxed.
    pub show_spheres: bool,
    pub rankdir: RankDir,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { show_spheres: true, rankdir: RankDir::LR }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("tick {tick} is outside the trace (last tick {last})")]
    TickOutOfRange { tick: u64, last: u64 },
    #[error("trace record names unknown machine `{0}`")]
    UnknownMachine(String),
}

pub fn to_dot(model: &Model, options: &RenderOptions) -> String {
    emit(model, options, &BTreeSet::new())
}

/// Renders the model with every stage named by a record at `tick` drawn with
/// a double outline.
pub fn to_trace_snapshot(
    model: &Model,
    trace: &EventTrace,
    tick: u64,
    options: &RenderOptions,
) -> Result<String, RenderError> {
    let last = trace.last_tick().unwrap_or(0);
    if tick > last {
        return Err(RenderError::TickOutOfRange { tick, last });
    }
    let mut marked = BTreeSet::new();
    for record in trace.at_tick(tick) {
        let machine = model
            .machine_by_path(&record.machine)
            .ok_or_else(|| RenderError::UnknownMachine(record.machine.clone()))?;
        marked.insert(StageRef::new(machine, record.stage));
    }
    Ok(emit(model, options, &marked))
}

/// Node ids drawn with a double outline in rendered DOT text.
pub fn snapshot_marks(dot: &str) -> BTreeSet<String> {
    dot.lines()
        .filter(|l| l.contains("peripheries=2"))
        .filter_map(|l| l.split_whitespace().next())
        .map(|id| id.trim_matches('"').to_string())
        .collect()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn stage_node(stage: StageRef) -> String {
    quote(&format!("m{}_{}", stage.machine.0, stage.stage))
}

fn junction_node(index: usize) -> String {
    quote(&format!("j{index}"))
}

fn emit(model: &Model, options: &RenderOptions, marked: &BTreeSet<StageRef>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph model {{").unwrap();
    writeln!(out, "  rankdir={};", options.rankdir).unwrap();
    writeln!(out, "  compound=true;").unwrap();
    writeln!(out, "  node [fontname=\"Helvetica\"];").unwrap();
    writeln!(out, "  subgraph cluster_root {{").unwrap();
    writeln!(out, "    label=\"\";").unwrap();
    for item in &model.root().items {
        write_item(model, options, marked, *item, 2, &mut out);
    }
    writeln!(out, "  }}").unwrap();
    for (i, junction) in model.junctions().iter().enumerate() {
        writeln!(
            out,
            "  {} [shape=rect, style=filled, fillcolor=black, label=\"\", xlabel={}, width=0.8, height=0.08];",
            junction_node(i),
            quote(&junction.name)
        )
        .unwrap();
    }
    for (i, arc) in model.arcs().iter().enumerate() {
        match arc {
            ModelArc::Flow(f) => {
                writeln!(out, "  {} -> {}; // arc {i}", stage_node(f.source), stage_node(f.target)).unwrap();
            }
            ModelArc::Trigger(t) => {
                let source = match t.source {
                    TriggerSource::Stage(s) => stage_node(s),
                    TriggerSource::Junction(j) => junction_node(j.0),
                };
                let target = match t.target {
                    TriggerTarget::Stage(s) => stage_node(s),
                    TriggerTarget::Junction(j) => junction_node(j.0),
                };
                let label = t.guard.as_ref().map(|g| format!(", label={}", quote(&g.to_string()))).unwrap_or_default();
                writeln!(out, "  {source} -> {target} [style=dashed{label}]; // arc {i}").unwrap();
            }
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

fn write_item(
    model: &Model,
    options: &RenderOptions,
    marked: &BTreeSet<StageRef>,
    item: SphereItem,
    depth: usize,
    out: &mut String,
) {
    let indent = "  ".repeat(depth);
    match item {
        SphereItem::Sphere(id) => {
            let Some(sphere) = model.sphere(id).filter(|_| id != SphereId::ROOT) else {
                return;
            };
            let inner = if options.show_spheres {
                writeln!(out, "{indent}subgraph cluster_s{} {{", id.0).unwrap();
                writeln!(out, "{indent}  label={};", quote(&sphere.name)).unwrap();
                writeln!(out, "{indent}  style=rounded;").unwrap();
                depth + 1
            } else {
                depth
            };
            for child in &sphere.items {
                write_item(model, options, marked, *child, inner, out);
            }
            if options.show_spheres {
                writeln!(out, "{indent}}}").unwrap();
            }
        }
        SphereItem::Machine(id) => {
            let Some(machine) = model.machine(id) else { return };
            let label = if options.show_spheres { machine.name.clone() } else { model.machine_path(id) };
            writeln!(out, "{indent}subgraph cluster_m{} {{", id.0).unwrap();
            writeln!(out, "{indent}  label={};", quote(&label)).unwrap();
            writeln!(out, "{indent}  style=solid;").unwrap();
            for &stage in &machine.stages {
                let node = StageRef::new(id, stage);
                let shape = if stage == StageKind::Storage { "cylinder" } else { "ellipse" };
                let mark = if marked.contains(&node) { ", peripheries=2" } else { "" };
                writeln!(out, "{indent}  {} [label={}, shape={shape}{mark}];", stage_node(node), quote(stage.as_str()))
                    .unwrap();
            }
            writeln!(out, "{indent}}}").unwrap();
        }
    }
}
