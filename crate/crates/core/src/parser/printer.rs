use std::fmt::Write;

use super::lexer::quote;
use super::ModelDocument;
use crate::model::{containment_tree, ActionId, LinkKind, StaticModel, Thimac};
use crate::sim::BehavioralModel;

const INDENT: &str = "    ";

/// Canonical `.tm` text for a document. Parsing the result gives back a
/// structurally equal document.
pub fn round_trip(doc: &ModelDocument) -> String {
    let mut out = String::new();
    let model = &doc.model;
    let tree = containment_tree(model);
    if let Some(roots) = tree.get(&None) {
        for root in roots {
            write_thimac(&mut out, model, &tree, root, 0);
        }
    }

    let section = |out: &mut String, lines: Vec<String>| {
        if lines.is_empty() {
            return;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
    };

    section(
        &mut out,
        model
            .flows()
            .iter()
            .map(|f| format!("flow {} -> {};", f.src, f.dst))
            .collect(),
    );
    section(
        &mut out,
        model
            .triggers()
            .iter()
            .map(|t| format!("trigger {} ~> {};", t.src, t.dst))
            .collect(),
    );
    section(
        &mut out,
        doc.events
            .iter()
            .map(|e| {
                let mut line = format!("event {}", e.id);
                if e.name != e.id {
                    write!(line, " {}", quote(&e.name)).unwrap();
                }
                let refs: Vec<&str> = e.action_ids.iter().map(ActionId::as_str).collect();
                write!(line, " over {{ {} }}", refs.join(", ")).unwrap();
                if !e.time_label.is_empty() {
                    write!(line, " at {}", quote(&e.time_label)).unwrap();
                }
                line.push(';');
                line
            })
            .collect(),
    );
    for b in &doc.behaviors {
        section(&mut out, behavior_lines(b));
    }
    out
}

type Tree<'m> = std::collections::BTreeMap<Option<crate::model::ThimacId>, Vec<&'m Thimac>>;

fn write_thimac(out: &mut String, model: &StaticModel, tree: &Tree<'_>, t: &Thimac, depth: usize) {
    let pad = INDENT.repeat(depth);
    let oo = if t.declared_oo { " oo" } else { "" };
    let actions: Vec<String> = model
        .actions()
        .iter()
        .filter(|a| a.owner == t.id)
        .map(|a| match &a.thing_label {
            Some(l) => format!("{}:{l};", a.kind),
            None => format!("{};", a.kind),
        })
        .collect();
    let shared: Vec<String> = model
        .part_links()
        .iter()
        .filter(|l| l.kind == LinkKind::Shared && l.whole == t.id)
        .map(|l| format!("shared part {};", l.part))
        .collect();
    let children = tree.get(&Some(t.id.clone()));
    if actions.is_empty() && shared.is_empty() && children.is_none() {
        writeln!(out, "{pad}thimac {}{oo} {{}}", t.name).unwrap();
        return;
    }
    writeln!(out, "{pad}thimac {}{oo} {{", t.name).unwrap();
    if !actions.is_empty() {
        writeln!(out, "{pad}{INDENT}machine {{ {} }}", actions.join(" ")).unwrap();
    }
    for s in shared {
        writeln!(out, "{pad}{INDENT}{s}").unwrap();
    }
    for child in children.into_iter().flatten() {
        write_thimac(out, model, tree, child, depth + 1);
    }
    writeln!(out, "{pad}}}").unwrap();
}

/// Edges are grouped into maximal chains; bare event statements are added
/// only when the edges alone would not reproduce the declared event order.
fn behavior_lines(b: &BehavioralModel) -> Vec<String> {
    let mut chains: Vec<Vec<&str>> = Vec::new();
    for (from, to) in &b.edges {
        match chains.last_mut() {
            Some(chain) if chain.last() == Some(&from.as_str()) => chain.push(to),
            _ => chains.push(vec![from, to]),
        }
    }
    let mut order: Vec<&str> = Vec::new();
    for name in chains.iter().flatten() {
        if !order.contains(name) {
            order.push(name);
        }
    }
    let mut isolated: Vec<&str> = b
        .event_ids
        .iter()
        .map(String::as_str)
        .filter(|e| !order.contains(e))
        .collect();
    order.extend(isolated.iter().copied());

    let mut statements: Vec<String> = Vec::new();
    if order.iter().copied().eq(b.event_ids.iter().map(String::as_str)) {
        statements.extend(chains.iter().map(|c| format!("{};", c.join(" -> "))));
        statements.extend(isolated.drain(..).map(|e| format!("{e};")));
    } else {
        statements.extend(b.event_ids.iter().map(|e| format!("{e};")));
        statements.extend(chains.iter().map(|c| format!("{};", c.join(" -> "))));
    }
    let mut lines = vec![format!("behavior {} {{", b.id)];
    lines.extend(statements.into_iter().map(|s| format!("{INDENT}{s}")));
    lines.push("}".to_owned());
    lines
}
