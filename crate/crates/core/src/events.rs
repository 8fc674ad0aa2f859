//! Events are subdiagrams of the static model bonded to a time label. This
//! module validates them and derives which events feed which.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::{self, Code, Diagnostic};
use crate::model::{ActionId, StaticModel};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub id: String,
    pub name: String,
    pub action_ids: BTreeSet<ActionId>,
    /// Opaque; may be empty.
    pub time_label: String,
}

impl Event {
    pub fn new<I, A>(id: &str, actions: I) -> Self
    where
        I: IntoIterator<Item = A>,
        A: Into<ActionId>,
    {
        Event {
            id: id.to_owned(),
            name: id.to_owned(),
            action_ids: actions.into_iter().map(Into::into).collect(),
            time_label: String::new(),
        }
    }
}

pub fn validate_event(model: &StaticModel, event: &Event) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if event.action_ids.is_empty() {
        out.push(Diagnostic::error(
            Code::EmptyEvent,
            &event.id,
            "event covers no actions",
        ));
    }
    for id in &event.action_ids {
        if model.action(id).is_none() {
            out.push(Diagnostic::error(
                Code::UnknownAction,
                &event.id,
                format!("event refers to unknown action `{id}`"),
            ));
        }
    }
    let known: Vec<&ActionId> = event
        .action_ids
        .iter()
        .filter(|id| model.action(id).is_some())
        .collect();
    let components = connected_components(model, &known);
    if components > 1 {
        out.push(Diagnostic::warning(
            Code::DisconnectedEvent,
            &event.id,
            format!("event subdiagram falls into {components} disconnected pieces"),
        ));
    }
    diagnostic::sort(&mut out);
    out
}

/// Components of the undirected view of the induced subgraph.
fn connected_components(model: &StaticModel, actions: &[&ActionId]) -> usize {
    let index: BTreeMap<&ActionId, usize> =
        actions.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut parent: Vec<usize> = (0..actions.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let sub = match model.induced_subgraph(actions.iter().copied()) {
        Ok(sub) => sub,
        Err(_) => return 0,
    };
    for edge in sub.edges() {
        let a = find(&mut parent, index[edge.src]);
        let b = find(&mut parent, index[edge.dst]);
        parent[a] = b;
    }
    (0..actions.len())
        .filter(|&i| find(&mut parent, i) == i)
        .count()
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyGraph {
    /// Event ids in input order.
    pub nodes: Vec<String>,
    /// (from, to) pairs, ordered by the node positions of their endpoints.
    pub edges: Vec<(String, String)>,
    pub cyclic: bool,
}

impl DependencyGraph {
    pub fn contains(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|(a, b)| a == from && b == to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EventError {
    #[error("INVALID_EVENT {event}: {}", first_message(.diagnostics))]
    InvalidEvent {
        event: String,
        diagnostics: Vec<Diagnostic>,
    },
}

fn first_message(diags: &[Diagnostic]) -> &str {
    diags.first().map(|d| d.message.as_str()).unwrap_or("invalid")
}

/// Ei -> Ej whenever a static flow or trigger leaves an action of Ei and
/// lands on an action of Ej that Ei does not itself cover.
pub fn derive_dependencies(
    model: &StaticModel,
    events: &[Event],
) -> Result<DependencyGraph, EventError> {
    for e in events {
        let diags = validate_event(model, e);
        if diagnostic::has_errors(&diags) {
            return Err(EventError::InvalidEvent {
                event: e.id.clone(),
                diagnostics: diags.into_iter().filter(Diagnostic::is_error).collect(),
            });
        }
    }
    // action -> positions of events that cover it
    let mut covering: BTreeMap<&ActionId, Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        for a in &e.action_ids {
            covering.entry(a).or_default().push(i);
        }
    }
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    for edge in model.edges() {
        let (Some(from), Some(to)) = (covering.get(edge.src), covering.get(edge.dst)) else {
            continue;
        };
        for &i in from {
            for &j in to {
                if i != j && !events[i].action_ids.contains(edge.dst) {
                    edges.insert((i, j));
                }
            }
        }
    }
    let cyclic = has_cycle(events.len(), edges.iter().copied());
    Ok(DependencyGraph {
        nodes: events.iter().map(|e| e.id.clone()).collect(),
        edges: edges
            .into_iter()
            .map(|(i, j)| (events[i].id.clone(), events[j].id.clone()))
            .collect(),
        cyclic,
    })
}

/// Directed cycle test over nodes `0..n` (Kahn's algorithm).
pub(crate) fn has_cycle(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut succ = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for (a, b) in edges {
        succ[a].push(b);
        indeg[b] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut seen = 0;
    while let Some(v) = ready.pop() {
        seen += 1;
        for &w in &succ[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    seen < n
}
