use std::fmt::Write;

use crate::model::{Domain, Model, ModelArc, SphereId, SphereItem, TriggerSource, TriggerTarget};

/// Canonical text for a model.
///
/// Things first, then the sphere tree, then arcs in declaration order with
/// each junction declared at the position of its output arc. Two-space
/// indentation, one declaration per line, LF endings. The empty model
/// serializes to the empty string.
pub fn serialize(model: &Model) -> String {
    let mut out = String::new();
    for thing in model.things() {
        if thing.attributes.is_empty() {
            writeln!(out, "thing {}", thing.name).unwrap();
            continue;
        }
        writeln!(out, "thing {} {{", thing.name).unwrap();
        for attr in &thing.attributes {
            let domain = match &attr.domain {
                Domain::Integer => "int".to_string(),
                Domain::Symbols(symbols) => symbols.join(" | "),
            };
            writeln!(out, "  {}: {}", attr.name, domain).unwrap();
        }
        out.push_str("}\n");
    }
    for item in &model.root().items {
        write_item(model, *item, 0, &mut out);
    }
    let stage = |s| model.stage_label(s);
    for (i, arc) in model.arcs().iter().enumerate() {
        match arc {
            ModelArc::Flow(f) => {
                writeln!(out, "flow {} -> {}", stage(f.source), stage(f.target)).unwrap();
            }
            ModelArc::Trigger(t) => match t.source {
                TriggerSource::Junction(j) => {
                    let name = model.junction(j).map_or("", |j| j.name.as_str());
                    let target = match t.target {
                        TriggerTarget::Stage(s) => stage(s),
                        TriggerTarget::Junction(_) => continue,
                    };
                    debug_assert_eq!(model.junction(j).map(|j| j.output.0), Some(i));
                    writeln!(out, "junction {name} => {target}").unwrap();
                }
                TriggerSource::Stage(source) => {
                    let target = match t.target {
                        TriggerTarget::Stage(s) => stage(s),
                        TriggerTarget::Junction(j) => {
                            format!("junction {}", model.junction(j).map_or("", |j| j.name.as_str()))
                        }
                    };
                    write!(out, "trigger {} => {}", stage(source), target).unwrap();
                    if let Some(g) = &t.guard {
                        write!(out, " when {g}").unwrap();
                    }
                    out.push('\n');
                }
            },
        }
    }
    out
}

fn write_item(model: &Model, item: SphereItem, depth: usize, out: &mut String) {
    let indent = "  ".repeat(depth);
    match item {
        SphereItem::Sphere(id) => {
            let Some(sphere) = model.sphere(id).filter(|_| id != SphereId::ROOT) else {
                return;
            };
            writeln!(out, "{indent}sphere {} {{", sphere.name).unwrap();
            for child in &sphere.items {
                write_item(model, *child, depth + 1, out);
            }
            writeln!(out, "{indent}}}").unwrap();
        }
        SphereItem::Machine(id) => {
            let Some(m) = model.machine(id) else { return };
            let kind = model.thing(m.kind).map_or("", |t| t.name.as_str());
            let stages: Vec<&str> = m.stages.iter().map(|s| s.as_str()).collect();
            writeln!(out, "{indent}machine {} of {kind} {{ stages {{ {} }} }}", m.name, stages.join(" ")).unwrap();
        }
    }
}
