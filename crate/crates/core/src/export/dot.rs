use std::collections::BTreeMap;
use std::fmt::Write;

use crate::model::{LinkKind, StaticModel, ThimacId};
use crate::sim::BehavioralModel;

/// DOT source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotDocument {
    pub text: String,
}

impl std::fmt::Display for DotDocument {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.text)
    }
}

fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn cluster(id: &ThimacId) -> String {
    q(&format!("cluster_{id}"))
}

fn anchor(id: &ThimacId) -> String {
    q(&format!("anchor:{id}"))
}

/// Containment as nested clusters, flows solid, triggers dashed, and shared
/// part links as bold undirected edges between per-thimac anchor points.
pub fn to_dot_static(model: &StaticModel) -> DotDocument {
    let mut children: BTreeMap<Option<&ThimacId>, Vec<&ThimacId>> = BTreeMap::new();
    for t in model.thimacs() {
        children.entry(t.parent.as_ref()).or_default().push(&t.id);
    }
    for list in children.values_mut() {
        list.sort();
    }
    let mut actions: BTreeMap<&ThimacId, Vec<(&str, String)>> = BTreeMap::new();
    for a in model.actions() {
        let label = match &a.thing_label {
            Some(l) => format!("{}:{l}", a.kind),
            None => a.kind.to_string(),
        };
        actions.entry(&a.owner).or_default().push((a.id.as_str(), label));
    }
    for list in actions.values_mut() {
        list.sort();
    }
    let mut anchored: Vec<&ThimacId> = model
        .part_links()
        .iter()
        .filter(|l| l.kind == LinkKind::Shared)
        .flat_map(|l| [&l.whole, &l.part])
        .collect();
    anchored.sort();
    anchored.dedup();

    let mut out = String::from("digraph \"static\" {\n");
    out.push_str("    compound=true;\n");
    out.push_str("    node [shape=box];\n");
    fn emit(
        out: &mut String,
        t: &ThimacId,
        depth: usize,
        model: &StaticModel,
        children: &BTreeMap<Option<&ThimacId>, Vec<&ThimacId>>,
        actions: &BTreeMap<&ThimacId, Vec<(&str, String)>>,
        anchored: &[&ThimacId],
    ) {
        let pad = "    ".repeat(depth);
        let thimac = model.thimac(t).expect("thimac in model");
        writeln!(out, "{pad}subgraph {} {{", cluster(t)).unwrap();
        writeln!(out, "{pad}    label={};", q(&thimac.name)).unwrap();
        if thimac.declared_oo {
            writeln!(out, "{pad}    style=bold;").unwrap();
            writeln!(out, "{pad}    penwidth=2;").unwrap();
        }
        if anchored.binary_search(&t).is_ok() {
            writeln!(
                out,
                "{pad}    {} [shape=point, style=invis, label=\"\"];",
                anchor(t)
            )
            .unwrap();
        }
        for (id, label) in actions.get(t).into_iter().flatten() {
            writeln!(out, "{pad}    {} [label={}];", q(id), q(label)).unwrap();
        }
        for child in children.get(&Some(t)).into_iter().flatten() {
            emit(out, child, depth + 1, model, children, actions, anchored);
        }
        writeln!(out, "{pad}}}").unwrap();
    }
    for root in children.get(&None).into_iter().flatten() {
        emit(&mut out, root, 1, model, &children, &actions, &anchored);
    }

    let mut flows: Vec<(&str, &str)> = model
        .flows()
        .iter()
        .map(|f| (f.src.as_str(), f.dst.as_str()))
        .collect();
    flows.sort();
    for (src, dst) in flows {
        writeln!(out, "    {} -> {};", q(src), q(dst)).unwrap();
    }
    let mut triggers: Vec<(&str, &str)> = model
        .triggers()
        .iter()
        .map(|t| (t.src.as_str(), t.dst.as_str()))
        .collect();
    triggers.sort();
    for (src, dst) in triggers {
        writeln!(out, "    {} -> {} [style=dashed];", q(src), q(dst)).unwrap();
    }
    let mut shared: Vec<(&ThimacId, &ThimacId)> = model
        .part_links()
        .iter()
        .filter(|l| l.kind == LinkKind::Shared)
        .map(|l| (&l.whole, &l.part))
        .collect();
    shared.sort();
    for (whole, part) in shared {
        writeln!(
            out,
            "    {} -> {} [style=bold, dir=none, ltail={}, lhead={}];",
            anchor(whole),
            anchor(part),
            cluster(whole),
            cluster(part)
        )
        .unwrap();
    }
    out.push_str("}\n");
    DotDocument { text: out }
}

/// One node per event and one edge per chronology edge, in declared order.
pub fn to_dot_behavior(b: &BehavioralModel) -> DotDocument {
    let mut out = format!("digraph {} {{\n", q(&b.id));
    out.push_str("    rankdir=LR;\n");
    out.push_str("    node [shape=ellipse];\n");
    for e in &b.event_ids {
        writeln!(out, "    {};", q(e)).unwrap();
    }
    for (from, to) in &b.edges {
        writeln!(out, "    {} -> {};", q(from), q(to)).unwrap();
    }
    out.push_str("}\n");
    DotDocument { text: out }
}
