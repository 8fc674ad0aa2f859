//! Random model generators and brute-force oracles shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use tmkit::checker::Mode;
use tmkit::diagnostic::{Code, Diagnostic, Severity};
use tmkit::sim::{BehavioralModel, Trace, TokenOrigin};
use tmkit::{
    build_model, Action, ActionKind, Declarations, Event, Flow, LinkKind, ModelDocument, PartLink,
    StaticModel, Thimac, ThimacId, Trigger,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(format!("{name}.tm"))
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_thimacs: usize,
    pub max_actions: usize,
    pub max_edges: usize,
    /// Only draw edges from earlier to later actions.
    pub forward_edges: bool,
}

impl Shape {
    pub const CHECKER: Shape = Shape {
        max_thimacs: 10,
        max_actions: 24,
        max_edges: 20,
        forward_edges: false,
    };
    pub const SIM: Shape = Shape {
        max_thimacs: 5,
        max_actions: 10,
        max_edges: 14,
        forward_edges: true,
    };
}

const LABELS: [Option<&str>; 3] = [None, Some("x"), Some("y")];

/// Declarations that always satisfy the structural invariants: parents point
/// to earlier thimacs and shared links run from earlier to later ones, so the
/// union of part links is acyclic.
pub fn random_declarations(rng: &mut impl Rng, shape: Shape) -> Declarations {
    let n = rng.gen_range(1..=shape.max_thimacs);
    let mut thimacs: Vec<Thimac> = Vec::new();
    for i in 0..n {
        let name = format!("T{i}");
        let oo = rng.gen_bool(0.4);
        let t = if i > 0 && rng.gen_bool(0.6) {
            let p = rng.gen_range(0..i);
            Thimac::child_of(&thimacs[p].id.clone(), &name, oo)
        } else {
            Thimac::root(&name, oo)
        };
        thimacs.push(t);
    }

    let mut part_links = Vec::new();
    if n > 1 {
        for _ in 0..rng.gen_range(0..=3) {
            let i = rng.gen_range(0..n - 1);
            let j = rng.gen_range(i + 1..n);
            let (w, p) = (&thimacs[i], &thimacs[j]);
            if p.parent.as_ref() == Some(&w.id) {
                continue;
            }
            let link = PartLink::shared(&w.id, &p.id);
            if !part_links.contains(&link) {
                part_links.push(link);
            }
        }
    }

    let mut actions: Vec<Action> = Vec::new();
    for _ in 0..rng.gen_range(0..=shape.max_actions) {
        let owner = &thimacs[rng.gen_range(0..n)].id;
        let kind = ActionKind::ALL[rng.gen_range(0..5)];
        let label = LABELS[rng.gen_range(0..LABELS.len())];
        let a = Action::new(kind, owner, label);
        if actions.iter().all(|b| b.id != a.id) {
            actions.push(a);
        }
    }

    let mut flows: Vec<Flow> = Vec::new();
    let mut triggers: Vec<Trigger> = Vec::new();
    if actions.len() > 1 {
        for _ in 0..rng.gen_range(0..=shape.max_edges) {
            let mut i = rng.gen_range(0..actions.len());
            let mut j = rng.gen_range(0..actions.len());
            if i == j {
                continue;
            }
            if shape.forward_edges && i > j {
                std::mem::swap(&mut i, &mut j);
            }
            let (src, dst) = (&actions[i].id, &actions[j].id);
            if rng.gen_bool(0.7) {
                let f = Flow::new(src, dst);
                if !flows.contains(&f) {
                    flows.push(f);
                }
            } else {
                let t = Trigger::new(src, dst);
                if !triggers.contains(&t) {
                    triggers.push(t);
                }
            }
        }
    }

    Declarations {
        thimacs,
        part_links,
        actions,
        flows,
        triggers,
    }
}

pub fn random_model(rng: &mut impl Rng, shape: Shape) -> StaticModel {
    let decls = random_declarations(rng, shape);
    build_model(decls.clone()).unwrap_or_else(|e| panic!("generator broke an invariant: {e:?}\n{decls:?}"))
}

/// Up to `max` events, each a non-empty random subset of the actions.
pub fn random_events(rng: &mut impl Rng, model: &StaticModel, max: usize) -> Vec<Event> {
    let actions = model.actions();
    if actions.is_empty() {
        return Vec::new();
    }
    (0..rng.gen_range(1..=max))
        .map(|i| {
            let mut ids: Vec<_> = actions
                .iter()
                .filter(|_| rng.gen_bool(0.35))
                .map(|a| a.id.clone())
                .collect();
            if ids.is_empty() {
                ids.push(actions[rng.gen_range(0..actions.len())].id.clone());
            }
            Event::new(&format!("E{i}"), ids)
        })
        .collect()
}

/// An acyclic chronology over `events` with a shuffled declaration order.
pub fn random_dag_behavior(rng: &mut impl Rng, id: &str, events: &[Event]) -> BehavioralModel {
    let mut order: Vec<String> = events.iter().map(|e| e.id.clone()).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if rng.gen_bool(0.3) {
                edges.push((order[i].clone(), order[j].clone()));
            }
        }
    }
    let mut event_ids = order;
    event_ids.shuffle(rng);
    BehavioralModel {
        id: id.to_owned(),
        event_ids,
        edges,
    }
}

/// A full document with names and time labels that exercise quoting.
pub fn random_document(rng: &mut impl Rng) -> ModelDocument {
    let model = random_model(rng, Shape::CHECKER);
    let mut events = random_events(rng, &model, 6);
    for (i, e) in events.iter_mut().enumerate() {
        if rng.gen_bool(0.5) {
            e.name = format!("step {i} says \"go\"");
        }
        if rng.gen_bool(0.5) {
            e.time_label = format!("t{i} \\ later");
        }
    }
    let mut behaviors = Vec::new();
    if !events.is_empty() {
        for k in 0..rng.gen_range(0..=2) {
            let mut subset: Vec<Event> = events.iter().filter(|_| rng.gen_bool(0.7)).cloned().collect();
            if subset.is_empty() {
                subset.push(events[0].clone());
            }
            let mut b = random_dag_behavior(rng, &format!("b{k}"), &subset);
            if b.event_ids.len() > 1 && rng.gen_bool(0.1) {
                let back = (b.event_ids[1].clone(), b.event_ids[0].clone());
                if !b.edges.contains(&back) {
                    b.edges.push(back);
                }
            }
            behaviors.push(b);
        }
    }
    ModelDocument {
        model,
        events,
        behaviors,
    }
}

/// Transitive closure over part links of the given kinds by repeated
/// expansion until nothing changes.
pub fn closure_oracle(links: &[PartLink], t: &ThimacId, kinds: &[LinkKind]) -> BTreeSet<ThimacId> {
    let mut reached: BTreeSet<ThimacId> = BTreeSet::new();
    loop {
        let before = reached.len();
        for l in links.iter().filter(|l| kinds.contains(&l.kind)) {
            if (&l.whole == t || reached.contains(&l.whole)) && &l.part != t {
                reached.insert(l.part.clone());
            }
        }
        if reached.len() == before {
            return reached;
        }
    }
}

pub fn legal_pair_oracle(src: ActionKind, dst: ActionKind, same_owner: bool) -> bool {
    let pair = (src.keyword(), dst.keyword());
    if same_owner {
        matches!(
            pair,
            ("receive", "process")
                | ("receive", "release")
                | ("process", "release")
                | ("create", "process")
                | ("create", "release")
                | ("release", "transfer")
                | ("transfer", "receive")
        )
    } else {
        pair == ("transfer", "transfer")
    }
}

pub type Key = (Severity, Code, String);

pub fn keys(diags: &[Diagnostic]) -> Vec<Key> {
    let mut out: Vec<Key> = diags
        .iter()
        .map(|d| (d.severity, d.code, d.subject.clone()))
        .collect();
    out.sort();
    out
}

/// Every flow against the pair table, every trigger against the owner test.
pub fn flow_legality_oracle(model: &StaticModel, mode: Mode) -> Vec<Key> {
    let severity = match mode {
        Mode::Strict => Severity::Error,
        Mode::Relaxed => Severity::Warning,
    };
    let mut out = Vec::new();
    for f in model.flows() {
        let a = model.action(&f.src).unwrap();
        let b = model.action(&f.dst).unwrap();
        let same = a.owner == b.owner;
        if !legal_pair_oracle(a.kind, b.kind, same) {
            let code = if same {
                Code::IllegalIntraFlow
            } else {
                Code::IllegalInterFlow
            };
            out.push((severity, code, format!("{}->{}", f.src, f.dst)));
        }
    }
    for t in model.triggers() {
        if model.action(&t.src).unwrap().owner == model.action(&t.dst).unwrap().owner {
            out.push((Severity::Warning, Code::SameMachineTrigger, format!("{}~>{}", t.src, t.dst)));
        }
    }
    out.sort();
    out
}

/// (edge id, whole) for every edge with exactly one endpoint owned by a
/// composite descendant of an oo whole and the other outside that whole.
pub fn boundary_oracle(model: &StaticModel) -> Vec<(String, String)> {
    let mut edges: Vec<(String, &tmkit::ActionId, &tmkit::ActionId)> = Vec::new();
    for f in model.flows() {
        edges.push((format!("{}->{}", f.src, f.dst), &f.src, &f.dst));
    }
    for t in model.triggers() {
        edges.push((format!("{}~>{}", t.src, t.dst), &t.src, &t.dst));
    }
    let mut out = Vec::new();
    for whole in model.thimacs().iter().filter(|t| t.declared_oo) {
        let inside = closure_oracle(model.part_links(), &whole.id, &[LinkKind::Composite]);
        for (id, a, b) in &edges {
            let oa = &model.action(a).unwrap().owner;
            let ob = &model.action(b).unwrap().owner;
            let outside = |o: &ThimacId| o != &whole.id && !inside.contains(o);
            let crosses = (inside.contains(oa) && outside(ob)) || (inside.contains(ob) && outside(oa));
            if crosses {
                out.push((id.clone(), whole.id.to_string()));
            }
        }
    }
    out.sort();
    out
}

/// The whole named in a BOUNDARY_BYPASS message (last backquoted name).
pub fn bypass_whole(d: &Diagnostic) -> String {
    let parts: Vec<&str> = d.message.split('`').collect();
    parts[parts.len() - 2].to_owned()
}

/// Scan every static edge against event membership.
pub fn dependency_oracle(model: &StaticModel, events: &[Event]) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    let pairs = model
        .flows()
        .iter()
        .map(|f| (&f.src, &f.dst))
        .chain(model.triggers().iter().map(|t| (&t.src, &t.dst)));
    for (a, b) in pairs {
        for ei in events {
            for ej in events {
                if ei.id != ej.id
                    && ei.action_ids.contains(a)
                    && ej.action_ids.contains(b)
                    && !ei.action_ids.contains(b)
                {
                    out.insert((ei.id.clone(), ej.id.clone()));
                }
            }
        }
    }
    out
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Every ordering of `b`'s events that puts each edge's source first.
pub fn all_topological_orders(b: &BehavioralModel) -> Vec<Vec<String>> {
    let index: BTreeMap<&str, usize> = b
        .event_ids
        .iter()
        .enumerate()
        .map(|(i, e)| (e.as_str(), i))
        .collect();
    permutations(b.event_ids.len())
        .into_iter()
        .filter(|perm| {
            let pos: BTreeMap<usize, usize> = perm.iter().enumerate().map(|(p, &e)| (e, p)).collect();
            b.edges
                .iter()
                .all(|(x, y)| pos[&index[x.as_str()]] < pos[&index[y.as_str()]])
        })
        .map(|perm| perm.into_iter().map(|i| b.event_ids[i].clone()).collect())
        .collect()
}

/// Reachability by repeated squaring of the edge relation.
pub fn reach_oracle(b: &BehavioralModel) -> BTreeSet<(String, String)> {
    let mut reach: BTreeSet<(String, String)> = b.edges.iter().cloned().collect();
    loop {
        let before = reach.len();
        let snapshot: Vec<_> = reach.iter().cloned().collect();
        for (a, x) in &snapshot {
            for (y, c) in &snapshot {
                if x == y {
                    reach.insert((a.clone(), c.clone()));
                }
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

/// Token bookkeeping recomputed from the trace record alone.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Recount {
    pub external: usize,
    pub created: usize,
    pub triggered: usize,
    pub create_firings: usize,
    pub resting: usize,
    pub exited: usize,
    pub process_changes: usize,
    pub ids_increasing: bool,
}

pub fn recount(trace: &Trace) -> Recount {
    let mut r = Recount {
        ids_increasing: trace.tokens.windows(2).all(|w| w[0].id < w[1].id),
        ..Default::default()
    };
    for t in &trace.tokens {
        match t.origin {
            TokenOrigin::External => r.external += 1,
            TokenOrigin::Created => r.created += 1,
            TokenOrigin::Triggered => r.triggered += 1,
        }
    }
    for f in &trace.firings {
        match f.kind {
            ActionKind::Create => r.create_firings += 1,
            ActionKind::Process if f.consumed.len() != f.emitted.len() => r.process_changes += 1,
            _ => {}
        }
    }
    r.resting = trace.final_locations.len();
    r.exited = trace.exits.len();
    r
}
