//! The textual `.tm` language: lexing, parsing, name resolution and the
//! canonical printer.

mod lexer;
mod printer;
mod syntax;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::events::Event;
use crate::model::{
    build_model, Action, ActionId, ActionKind, Declarations, Flow, PartLink, StaticModel,
    StructureCode, StructureError, Subject, Thimac, ThimacId, Trigger,
};
use crate::sim::BehavioralModel;

pub use printer::round_trip;
pub(crate) use lexer::is_identifier;

use syntax::{ActRef, BehaviorDecl, EdgeDecl, EventDecl, Item, Parser, ThimacDecl, TopItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParseCode {
    LexError,
    SyntaxError,
    UnknownThimac,
    UnknownAction,
    AmbiguousReference,
    UnknownEvent,
    DuplicateEvent,
    DuplicateBehavior,
    Structure(StructureCode),
}

impl ParseCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseCode::LexError => "LEX_ERROR",
            ParseCode::SyntaxError => "SYNTAX_ERROR",
            ParseCode::UnknownThimac => "UNKNOWN_THIMAC",
            ParseCode::UnknownAction => "UNKNOWN_ACTION",
            ParseCode::AmbiguousReference => "AMBIGUOUS_REFERENCE",
            ParseCode::UnknownEvent => "UNKNOWN_EVENT",
            ParseCode::DuplicateEvent => "DUPLICATE_EVENT",
            ParseCode::DuplicateBehavior => "DUPLICATE_BEHAVIOR",
            ParseCode::Structure(code) => code.as_str(),
        }
    }
}

impl fmt::Display for ParseCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span} {code}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub code: ParseCode,
    pub message: String,
}

/// A parsed `.tm` file: the static model plus its events and behaviors.
#[derive(Debug, Clone, Default)]
pub struct ModelDocument {
    pub model: StaticModel,
    pub events: Vec<Event>,
    pub behaviors: Vec<BehavioralModel>,
}

impl ModelDocument {
    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn behavior(&self, id: &str) -> Option<&BehavioralModel> {
        self.behaviors.iter().find(|b| b.id == id)
    }
}

/// Structural equality: the model compares as sets, events and behaviors are
/// matched by id, and a behavior's own ordering is significant.
impl PartialEq for ModelDocument {
    fn eq(&self, other: &Self) -> bool {
        fn events(d: &ModelDocument) -> BTreeSet<&Event> {
            d.events.iter().collect()
        }
        fn behaviors(d: &ModelDocument) -> BTreeMap<&str, &BehavioralModel> {
            d.behaviors.iter().map(|b| (b.id.as_str(), b)).collect()
        }
        self.events.len() == other.events.len()
            && self.behaviors.len() == other.behaviors.len()
            && self.model == other.model
            && events(self) == events(other)
            && behaviors(self) == behaviors(other)
    }
}

impl Eq for ModelDocument {}

pub fn parse(text: &str) -> Result<ModelDocument, Vec<ParseError>> {
    let (tokens, mut errors) = lexer::lex(text);
    let mut parser = Parser::new(&tokens);
    let items = parser.document();
    errors.append(&mut parser.errors);
    if !errors.is_empty() {
        return Err(sorted(errors));
    }
    let mut lower = Lower::default();
    let result = lower.run(items);
    match result {
        Ok(doc) if lower.errors.is_empty() => Ok(doc),
        _ => Err(sorted(lower.errors)),
    }
}

fn sorted(mut errors: Vec<ParseError>) -> Vec<ParseError> {
    errors.sort_by(|a, b| {
        (a.span, a.code, &a.message).cmp(&(b.span, b.code, &b.message))
    });
    errors.dedup();
    errors
}

/// Spans of declarations, for re-surfacing structure errors.
#[derive(Default)]
struct Spans {
    thimacs: HashMap<ThimacId, SourceSpan>,
    actions: HashMap<ActionId, SourceSpan>,
    links: HashMap<(ThimacId, ThimacId), SourceSpan>,
    flows: HashMap<(ActionId, ActionId), SourceSpan>,
    triggers: HashMap<(ActionId, ActionId), SourceSpan>,
}

#[derive(Default)]
struct Lower {
    decls: Declarations,
    spans: Spans,
    errors: Vec<ParseError>,
    /// Kinds and labels per owner, for resolving unlabeled references.
    machine: HashMap<ThimacId, Vec<(ActionKind, Option<String>)>>,
}

struct PendingEdge {
    flow: bool,
    scope: Vec<ThimacId>,
    decl: EdgeDecl,
}

struct PendingShared {
    whole: ThimacId,
    scope: Vec<ThimacId>,
    path: Vec<String>,
    span: SourceSpan,
}

impl Lower {
    fn err(&mut self, span: SourceSpan, code: ParseCode, message: String) {
        self.errors.push(ParseError {
            span,
            code,
            message,
        });
    }

    fn run(&mut self, items: Vec<TopItem>) -> Result<ModelDocument, ()> {
        let mut edges = Vec::new();
        let mut shared = Vec::new();
        let mut events = Vec::new();
        let mut behaviors = Vec::new();
        for item in items {
            match item {
                TopItem::Thimac(t) => self.declare(t, None, &mut edges, &mut shared),
                TopItem::Flow(decl) => edges.push(PendingEdge {
                    flow: true,
                    scope: Vec::new(),
                    decl,
                }),
                TopItem::Trigger(decl) => edges.push(PendingEdge {
                    flow: false,
                    scope: Vec::new(),
                    decl,
                }),
                TopItem::Event(e) => events.push(e),
                TopItem::Behavior(b) => behaviors.push(b),
            }
        }

        let known: BTreeSet<ThimacId> = self.decls.thimacs.iter().map(|t| t.id.clone()).collect();
        for s in shared {
            match resolve_path(&known, &s.scope, &s.path) {
                Some(part) => {
                    self.spans
                        .links
                        .insert((s.whole.clone(), part.clone()), s.span);
                    self.decls.part_links.push(PartLink::shared(&s.whole, &part));
                }
                None => self.err(
                    s.span,
                    ParseCode::UnknownThimac,
                    format!("shared part `{}` is not a declared thimac", s.path.join(".")),
                ),
            }
        }
        for e in edges {
            let src = self.resolve(&known, &e.scope, &e.decl.src);
            let dst = self.resolve(&known, &e.scope, &e.decl.dst);
            let (Some(src), Some(dst)) = (src, dst) else {
                continue;
            };
            let key = (src.clone(), dst.clone());
            if e.flow {
                self.spans.flows.insert(key, e.decl.span);
                self.decls.flows.push(Flow::new(src, dst));
            } else {
                self.spans.triggers.insert(key, e.decl.span);
                self.decls.triggers.push(Trigger::new(src, dst));
            }
        }

        let events = self.events(&known, events);
        let behaviors = self.behaviors(&events, behaviors);

        let decls = std::mem::take(&mut self.decls);
        let model = match build_model(decls) {
            Ok(model) => model,
            Err(structure) => {
                for e in structure {
                    let span = self.span_of(&e);
                    self.err(span, ParseCode::Structure(e.code), e.message.clone());
                }
                return Err(());
            }
        };
        if !self.errors.is_empty() {
            return Err(());
        }
        Ok(ModelDocument {
            model,
            events,
            behaviors,
        })
    }

    fn declare(
        &mut self,
        t: ThimacDecl,
        parent: Option<&ThimacId>,
        edges: &mut Vec<PendingEdge>,
        shared: &mut Vec<PendingShared>,
    ) {
        let thimac = match parent {
            Some(p) => Thimac::child_of(p, &t.name, t.oo),
            None => Thimac::root(&t.name, t.oo),
        };
        let id = thimac.id.clone();
        self.spans.thimacs.insert(id.clone(), t.name_span);
        self.decls.thimacs.push(thimac);
        self.machine.entry(id.clone()).or_default();
        let scope = scope_of(&id);
        for item in t.items {
            match item {
                Item::Thimac(child) => self.declare(child, Some(&id), edges, shared),
                Item::Shared { path, span } => shared.push(PendingShared {
                    whole: id.clone(),
                    scope: scope.clone(),
                    path,
                    span,
                }),
                Item::Machine(entries) => {
                    for entry in entries {
                        let action = Action::new(entry.kind, &id, entry.label.as_deref());
                        self.spans.actions.insert(action.id.clone(), entry.span);
                        self.machine
                            .entry(id.clone())
                            .or_default()
                            .push((entry.kind, entry.label));
                        self.decls.actions.push(action);
                    }
                }
                Item::Flow(decl) => edges.push(PendingEdge {
                    flow: true,
                    scope: scope.clone(),
                    decl,
                }),
                Item::Trigger(decl) => edges.push(PendingEdge {
                    flow: false,
                    scope: scope.clone(),
                    decl,
                }),
            }
        }
    }

    fn resolve(
        &mut self,
        known: &BTreeSet<ThimacId>,
        scope: &[ThimacId],
        r: &ActRef,
    ) -> Option<ActionId> {
        let Some(owner) = resolve_path(known, scope, &r.path) else {
            self.err(
                r.span,
                ParseCode::UnknownThimac,
                format!("`{}` is not a declared thimac", r.path.join(".")),
            );
            return None;
        };
        let entries = self.machine.get(&owner).map(Vec::as_slice).unwrap_or(&[]);
        let exact = entries
            .iter()
            .any(|(k, l)| *k == r.kind && *l == r.label);
        if exact {
            return Some(ActionId::canonical(r.kind, &owner, r.label.as_deref()));
        }
        if r.label.is_none() {
            let same_kind: Vec<&Option<String>> = entries
                .iter()
                .filter(|(k, _)| *k == r.kind)
                .map(|(_, l)| l)
                .collect();
            if same_kind.len() == 1 {
                return Some(ActionId::canonical(r.kind, &owner, same_kind[0].as_deref()));
            }
            if same_kind.len() > 1 {
                self.err(
                    r.span,
                    ParseCode::AmbiguousReference,
                    format!(
                        "`{}` matches {} {} actions of `{owner}`; add a thing label",
                        r.text(),
                        same_kind.len(),
                        r.kind
                    ),
                );
                return None;
            }
        }
        self.err(
            r.span,
            ParseCode::UnknownAction,
            format!("`{owner}` declares no action `{}`", r.text()),
        );
        None
    }

    fn events(&mut self, known: &BTreeSet<ThimacId>, decls: Vec<EventDecl>) -> Vec<Event> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in decls {
            if !seen.insert(e.id.clone()) {
                self.err(
                    e.id_span,
                    ParseCode::DuplicateEvent,
                    format!("event `{}` is declared more than once", e.id),
                );
                continue;
            }
            let mut actions = BTreeSet::new();
            for r in &e.refs {
                if let Some(id) = self.resolve(known, &[], r) {
                    actions.insert(id);
                }
            }
            out.push(Event {
                name: e.name.unwrap_or_else(|| e.id.clone()),
                id: e.id,
                action_ids: actions,
                time_label: e.time_label.unwrap_or_default(),
            });
        }
        out
    }

    fn behaviors(&mut self, events: &[Event], decls: Vec<BehaviorDecl>) -> Vec<BehavioralModel> {
        let declared: BTreeSet<&str> = events.iter().map(|e| e.id.as_str()).collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for b in decls {
            if !seen.insert(b.id.clone()) {
                self.err(
                    b.id_span,
                    ParseCode::DuplicateBehavior,
                    format!("behavior `{}` is declared more than once", b.id),
                );
                continue;
            }
            let mut event_ids: Vec<String> = Vec::new();
            let mut edges: Vec<(String, String)> = Vec::new();
            for chain in &b.chains {
                for (name, span) in chain {
                    if !declared.contains(name.as_str()) {
                        self.err(
                            *span,
                            ParseCode::UnknownEvent,
                            format!("behavior `{}` refers to undeclared event `{name}`", b.id),
                        );
                    } else if !event_ids.contains(name) {
                        event_ids.push(name.clone());
                    }
                }
                for pair in chain.windows(2) {
                    let edge = (pair[0].0.clone(), pair[1].0.clone());
                    if !edges.contains(&edge) {
                        edges.push(edge);
                    }
                }
            }
            out.push(BehavioralModel {
                id: b.id,
                event_ids,
                edges,
            });
        }
        out
    }

    fn span_of(&self, e: &StructureError) -> SourceSpan {
        let fallback = SourceSpan {
            line: 1,
            column: 1,
            length: 0,
        };
        let found = match &e.subject {
            Subject::Thimac(id) => self.spans.thimacs.get(id),
            Subject::Action(id) => self.spans.actions.get(id),
            Subject::PartLink(w, p) => self
                .spans
                .links
                .get(&(w.clone(), p.clone()))
                .or_else(|| self.spans.thimacs.get(p)),
            Subject::Flow(a, b) => self.spans.flows.get(&(a.clone(), b.clone())),
            Subject::Trigger(a, b) => self.spans.triggers.get(&(a.clone(), b.clone())),
        };
        found.copied().unwrap_or(fallback)
    }
}

/// `Car.Engine` gives `[Car.Engine, Car]`: innermost scope first.
fn scope_of(id: &ThimacId) -> Vec<ThimacId> {
    let parts: Vec<&str> = id.as_str().split('.').collect();
    (1..=parts.len())
        .rev()
        .map(|n| ThimacId::new(parts[..n].join(".")))
        .collect()
}

/// A path names a thimac absolutely, or else relative to the innermost
/// enclosing block that makes it resolve.
fn resolve_path(
    known: &BTreeSet<ThimacId>,
    scope: &[ThimacId],
    path: &[String],
) -> Option<ThimacId> {
    let joined = path.join(".");
    let absolute = ThimacId::new(joined.clone());
    if known.contains(&absolute) {
        return Some(absolute);
    }
    scope
        .iter()
        .map(|s| ThimacId::new(format!("{s}.{joined}")))
        .find(|id| known.contains(id))
}
