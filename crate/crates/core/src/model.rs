//! The static model: a containment forest of thimacs, whole/part links, the
//! actions each thimac's machine performs, and the flows and triggers between
//! those actions.
//!
//! A [`StaticModel`] can only be obtained through [`build_model`], which
//! checks every referential and structural invariant at once and reports all
//! violations it finds. Once built the model is immutable.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// The five generic actions a machine can perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Create,
    Process,
    Release,
    Transfer,
    Receive,
}

impl ActionKind {
    pub const ALL: [ActionKind; 5] = [
        ActionKind::Create,
        ActionKind::Process,
        ActionKind::Release,
        ActionKind::Transfer,
        ActionKind::Receive,
    ];

    /// Lower-case keyword used in the DSL and in action ids.
    pub fn keyword(self) -> &'static str {
        match self {
            ActionKind::Create => "create",
            ActionKind::Process => "process",
            ActionKind::Release => "release",
            ActionKind::Transfer => "transfer",
            ActionKind::Receive => "receive",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        ActionKind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Upper-case name, as used in JSON and reports.
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Create => "CREATE",
            ActionKind::Process => "PROCESS",
            ActionKind::Release => "RELEASE",
            ActionKind::Transfer => "TRANSFER",
            ActionKind::Receive => "RECEIVE",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Dot-path identifier of a thimac, e.g. `Car.Engine`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThimacId(String);

impl ThimacId {
    pub fn new(id: impl Into<String>) -> Self {
        ThimacId(id.into())
    }

    /// Id of the child named `name` under this thimac.
    pub fn child(&self, name: &str) -> Self {
        ThimacId(format!("{}.{}", self.0, name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ThimacId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ThimacId {
    fn from(s: &str) -> Self {
        ThimacId(s.to_owned())
    }
}

/// Identifier of an action. Canonically `kind.owner-path[:label]`, e.g.
/// `receive.Car.Engine:signal`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(String);

impl ActionId {
    pub fn new(id: impl Into<String>) -> Self {
        ActionId(id.into())
    }

    pub fn canonical(kind: ActionKind, owner: &ThimacId, label: Option<&str>) -> Self {
        match label {
            Some(label) => ActionId(format!("{}.{}:{}", kind.keyword(), owner, label)),
            None => ActionId(format!("{}.{}", kind.keyword(), owner)),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionId {
    fn from(s: &str) -> Self {
        ActionId(s.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Thimac {
    pub id: ThimacId,
    pub name: String,
    /// Lexical (composite) container.
    pub parent: Option<ThimacId>,
    pub declared_oo: bool,
}

impl Thimac {
    pub fn root(name: &str, declared_oo: bool) -> Self {
        Thimac {
            id: ThimacId::new(name),
            name: name.to_owned(),
            parent: None,
            declared_oo,
        }
    }

    pub fn child_of(parent: &ThimacId, name: &str, declared_oo: bool) -> Self {
        Thimac {
            id: parent.child(name),
            name: name.to_owned(),
            parent: Some(parent.clone()),
            declared_oo,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkKind {
    /// Exclusive whole/part binding; the part lives and dies with the whole.
    Composite,
    /// Weak aggregation; the part may belong to any number of wholes.
    Shared,
}

impl LinkKind {
    pub const ALL: [LinkKind; 2] = [LinkKind::Composite, LinkKind::Shared];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Composite => "COMPOSITE",
            LinkKind::Shared => "SHARED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartLink {
    pub whole: ThimacId,
    pub part: ThimacId,
    pub kind: LinkKind,
}

impl PartLink {
    pub fn composite(whole: &ThimacId, part: &ThimacId) -> Self {
        PartLink {
            whole: whole.clone(),
            part: part.clone(),
            kind: LinkKind::Composite,
        }
    }

    pub fn shared(whole: &ThimacId, part: &ThimacId) -> Self {
        PartLink {
            whole: whole.clone(),
            part: part.clone(),
            kind: LinkKind::Shared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Action {
    pub id: ActionId,
    pub kind: ActionKind,
    pub owner: ThimacId,
    pub thing_label: Option<String>,
}

impl Action {
    /// An action whose id is derived from kind, owner and label.
    pub fn new(kind: ActionKind, owner: &ThimacId, label: Option<&str>) -> Self {
        Action {
            id: ActionId::canonical(kind, owner, label),
            kind,
            owner: owner.clone(),
            thing_label: label.map(str::to_owned),
        }
    }
}

/// Movement of a thing from one action to another (solid arrow).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Flow {
    pub src: ActionId,
    pub dst: ActionId,
}

impl Flow {
    pub fn new(src: impl Into<ActionId>, dst: impl Into<ActionId>) -> Self {
        Flow {
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub fn id(&self) -> String {
        format!("{}->{}", self.src, self.dst)
    }
}

/// Causal link starting the movement of a different thing (dashed arrow).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Trigger {
    pub src: ActionId,
    pub dst: ActionId,
}

impl Trigger {
    pub fn new(src: impl Into<ActionId>, dst: impl Into<ActionId>) -> Self {
        Trigger {
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub fn id(&self) -> String {
        format!("{}~>{}", self.src, self.dst)
    }
}

impl From<String> for ActionId {
    fn from(s: String) -> Self {
        ActionId(s)
    }
}

impl From<&ActionId> for ActionId {
    fn from(id: &ActionId) -> Self {
        id.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Flow,
    Trigger,
}

/// A flow or trigger viewed uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRef<'a> {
    pub kind: EdgeKind,
    pub src: &'a ActionId,
    pub dst: &'a ActionId,
}

impl EdgeRef<'_> {
    pub fn id(&self) -> String {
        match self.kind {
            EdgeKind::Flow => format!("{}->{}", self.src, self.dst),
            EdgeKind::Trigger => format!("{}~>{}", self.src, self.dst),
        }
    }
}

/// Raw, unchecked declarations handed to [`build_model`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Declarations {
    pub thimacs: Vec<Thimac>,
    pub part_links: Vec<PartLink>,
    pub actions: Vec<Action>,
    pub flows: Vec<Flow>,
    pub triggers: Vec<Trigger>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StructureCode {
    DuplicateId,
    DanglingReference,
    ContainmentCycle,
    MultipleCompositeWholes,
    PartCycle,
    SelfFlow,
    SelfTrigger,
    DuplicateEdge,
}

impl StructureCode {
    pub fn as_str(self) -> &'static str {
        match self {
            StructureCode::DuplicateId => "DUPLICATE_ID",
            StructureCode::DanglingReference => "DANGLING_REFERENCE",
            StructureCode::ContainmentCycle => "CONTAINMENT_CYCLE",
            StructureCode::MultipleCompositeWholes => "MULTIPLE_COMPOSITE_WHOLES",
            StructureCode::PartCycle => "PART_CYCLE",
            StructureCode::SelfFlow => "SELF_FLOW",
            StructureCode::SelfTrigger => "SELF_TRIGGER",
            StructureCode::DuplicateEdge => "DUPLICATE_EDGE",
        }
    }
}

impl fmt::Display for StructureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The declaration a structure error is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Thimac(ThimacId),
    Action(ActionId),
    PartLink(ThimacId, ThimacId),
    Flow(ActionId, ActionId),
    Trigger(ActionId, ActionId),
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subject::Thimac(id) => write!(f, "{id}"),
            Subject::Action(id) => write!(f, "{id}"),
            Subject::PartLink(whole, part) => write!(f, "{whole}=>{part}"),
            Subject::Flow(src, dst) => write!(f, "{src}->{dst}"),
            Subject::Trigger(src, dst) => write!(f, "{src}~>{dst}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{code} {subject}: {message}")]
pub struct StructureError {
    pub code: StructureCode,
    pub subject: Subject,
    /// Thimacs involved, for cycle and multiplicity errors (sorted).
    pub members: Vec<ThimacId>,
    pub message: String,
}

impl StructureError {
    fn new(code: StructureCode, subject: Subject, message: impl Into<String>) -> Self {
        StructureError {
            code,
            subject,
            members: Vec::new(),
            message: message.into(),
        }
    }

    fn with_members(mut self, members: Vec<ThimacId>) -> Self {
        self.members = members;
        self
    }
}

/// Errors raised by queries against a built model.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("UNKNOWN_THIMAC: no thimac `{0}`")]
    UnknownThimac(ThimacId),
    #[error("UNKNOWN_ACTION: no action `{0}`")]
    UnknownAction(ActionId),
}

/// A validated, immutable static model.
#[derive(Debug, Clone, Default)]
pub struct StaticModel {
    thimacs: Vec<Thimac>,
    part_links: Vec<PartLink>,
    actions: Vec<Action>,
    flows: Vec<Flow>,
    triggers: Vec<Trigger>,

    thimac_index: HashMap<ThimacId, usize>,
    action_index: HashMap<ActionId, usize>,
    /// Outgoing part links per thimac index, as (part index, kind).
    parts: Vec<Vec<(usize, LinkKind)>>,
    flows_in: Vec<Vec<usize>>,
    flows_out: Vec<Vec<usize>>,
    triggers_in: Vec<Vec<usize>>,
    triggers_out: Vec<Vec<usize>>,
}

/// Structural equality: the five component sets are equal, regardless of
/// declaration order.
impl PartialEq for StaticModel {
    fn eq(&self, other: &Self) -> bool {
        fn set<T: Ord>(items: &[T]) -> BTreeSet<&T> {
            items.iter().collect()
        }
        set(&self.thimacs) == set(&other.thimacs)
            && set(&self.part_links) == set(&other.part_links)
            && set(&self.actions) == set(&other.actions)
            && set(&self.flows) == set(&other.flows)
            && set(&self.triggers) == set(&other.triggers)
    }
}

impl Eq for StaticModel {}

impl StaticModel {
    pub fn thimacs(&self) -> &[Thimac] {
        &self.thimacs
    }

    pub fn part_links(&self) -> &[PartLink] {
        &self.part_links
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    /// All flows followed by all triggers.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> {
        let flows = self.flows.iter().map(|f| EdgeRef {
            kind: EdgeKind::Flow,
            src: &f.src,
            dst: &f.dst,
        });
        let triggers = self.triggers.iter().map(|t| EdgeRef {
            kind: EdgeKind::Trigger,
            src: &t.src,
            dst: &t.dst,
        });
        flows.chain(triggers)
    }

    pub fn thimac(&self, id: &ThimacId) -> Option<&Thimac> {
        self.thimac_index.get(id).map(|&i| &self.thimacs[i])
    }

    pub fn action(&self, id: &ActionId) -> Option<&Action> {
        self.action_index.get(id).map(|&i| &self.actions[i])
    }

    /// Declaration position of an action.
    pub fn action_position(&self, id: &ActionId) -> Option<usize> {
        self.action_index.get(id).copied()
    }

    /// Owner of an action. Panics on an unknown id.
    pub fn owner_of(&self, id: &ActionId) -> &ThimacId {
        &self.actions[self.action_index[id]].owner
    }

    pub fn flows_into(&self, id: &ActionId) -> impl Iterator<Item = &Flow> {
        self.adjacent(&self.flows_in, id).map(|i| &self.flows[i])
    }

    pub fn flows_out_of(&self, id: &ActionId) -> impl Iterator<Item = &Flow> {
        self.adjacent(&self.flows_out, id).map(|i| &self.flows[i])
    }

    pub fn triggers_into(&self, id: &ActionId) -> impl Iterator<Item = &Trigger> {
        self.adjacent(&self.triggers_in, id).map(|i| &self.triggers[i])
    }

    pub fn triggers_out_of(&self, id: &ActionId) -> impl Iterator<Item = &Trigger> {
        self.adjacent(&self.triggers_out, id).map(|i| &self.triggers[i])
    }

    fn adjacent<'a>(
        &'a self,
        table: &'a [Vec<usize>],
        id: &ActionId,
    ) -> impl Iterator<Item = usize> + 'a {
        self.action_index
            .get(id)
            .map(|&i| table[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .copied()
    }

    /// Direct parts of a thimac with their link kinds, in link order.
    pub fn parts_of(&self, id: &ThimacId) -> impl Iterator<Item = (&ThimacId, LinkKind)> {
        self.thimac_index
            .get(id)
            .map(|&i| self.parts[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|&(p, kind)| (&self.thimacs[p].id, kind))
    }

    pub fn has_parts(&self, id: &ThimacId) -> bool {
        self.parts_of(id).next().is_some()
    }

    /// Composite children (containment forest) of a thimac.
    pub fn children(&self, id: &ThimacId) -> impl Iterator<Item = &ThimacId> {
        self.parts_of(id)
            .filter(|(_, kind)| *kind == LinkKind::Composite)
            .map(|(p, _)| p)
    }

    /// Transitive closure of part links restricted to `kinds`, excluding `t`.
    pub fn descendants(
        &self,
        t: &ThimacId,
        kinds: &[LinkKind],
    ) -> Result<BTreeSet<ThimacId>, ModelError> {
        let start = *self
            .thimac_index
            .get(t)
            .ok_or_else(|| ModelError::UnknownThimac(t.clone()))?;
        let mut seen = vec![false; self.thimacs.len()];
        let mut stack = vec![start];
        let mut out = BTreeSet::new();
        while let Some(i) = stack.pop() {
            for &(p, kind) in &self.parts[i] {
                if kinds.contains(&kind) && !seen[p] {
                    seen[p] = true;
                    stack.push(p);
                    if p != start {
                        out.insert(self.thimacs[p].id.clone());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Is `candidate` a proper composite descendant of `ancestor`?
    pub fn is_inside(&self, candidate: &ThimacId, ancestor: &ThimacId) -> bool {
        let mut cursor = self.thimac(candidate).and_then(|t| t.parent.as_ref());
        while let Some(p) = cursor {
            if p == ancestor {
                return true;
            }
            cursor = self.thimac(p).and_then(|t| t.parent.as_ref());
        }
        false
    }

    /// The actions in `action_ids` plus every flow and trigger with both
    /// endpoints among them.
    pub fn induced_subgraph<'a, I>(&self, action_ids: I) -> Result<Subgraph, ModelError>
    where
        I: IntoIterator<Item = &'a ActionId>,
    {
        let mut actions = BTreeSet::new();
        for id in action_ids {
            if !self.action_index.contains_key(id) {
                return Err(ModelError::UnknownAction(id.clone()));
            }
            actions.insert(id.clone());
        }
        let flows = self
            .flows
            .iter()
            .filter(|f| actions.contains(&f.src) && actions.contains(&f.dst))
            .cloned()
            .collect();
        let triggers = self
            .triggers
            .iter()
            .filter(|t| actions.contains(&t.src) && actions.contains(&t.dst))
            .cloned()
            .collect();
        Ok(Subgraph {
            actions,
            flows,
            triggers,
        })
    }

    /// The declarations this model was built from, after normalization.
    pub fn declarations(&self) -> Declarations {
        Declarations {
            thimacs: self.thimacs.clone(),
            part_links: self.part_links.clone(),
            actions: self.actions.clone(),
            flows: self.flows.clone(),
            triggers: self.triggers.clone(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.thimacs.is_empty() && self.actions.is_empty()
    }
}

/// Part of a static model selected by a set of actions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subgraph {
    pub actions: BTreeSet<ActionId>,
    pub flows: Vec<Flow>,
    pub triggers: Vec<Trigger>,
}

impl Subgraph {
    pub fn edges(&self) -> impl Iterator<Item = EdgeRef<'_>> {
        let flows = self.flows.iter().map(|f| EdgeRef {
            kind: EdgeKind::Flow,
            src: &f.src,
            dst: &f.dst,
        });
        let triggers = self.triggers.iter().map(|t| EdgeRef {
            kind: EdgeKind::Trigger,
            src: &t.src,
            dst: &t.dst,
        });
        flows.chain(triggers)
    }
}

/// Validate raw declarations into a [`StaticModel`].
///
/// Every violation is collected; the model is returned only when there are
/// none. A thimac without a declared parent that is the part of exactly one
/// COMPOSITE link gets that whole as its parent, and every parent edge gets a
/// COMPOSITE link, so in the result the two relations coincide.
pub fn build_model(decls: Declarations) -> Result<StaticModel, Vec<StructureError>> {
    use StructureCode::*;

    let Declarations {
        mut thimacs,
        part_links,
        actions,
        flows,
        triggers,
    } = decls;
    let mut errors = Vec::new();

    // Thimacs: unique ids, unique sibling names, parents exist.
    let mut thimac_index: HashMap<ThimacId, usize> = HashMap::new();
    let mut keep_thimac = vec![true; thimacs.len()];
    for (i, t) in thimacs.iter().enumerate() {
        if thimac_index.contains_key(&t.id) {
            errors.push(StructureError::new(
                DuplicateId,
                Subject::Thimac(t.id.clone()),
                format!("thimac `{}` is declared more than once", t.id),
            ));
            keep_thimac[i] = false;
        } else {
            thimac_index.insert(t.id.clone(), i);
        }
    }
    let mut sibling_names: HashSet<(Option<&ThimacId>, &str)> = HashSet::new();
    for (i, t) in thimacs.iter().enumerate() {
        if keep_thimac[i] && !sibling_names.insert((t.parent.as_ref(), t.name.as_str())) {
            errors.push(StructureError::new(
                DuplicateId,
                Subject::Thimac(t.id.clone()),
                format!("another sibling of `{}` is already named `{}`", t.id, t.name),
            ));
        }
    }
    for (i, t) in thimacs.iter().enumerate() {
        if !keep_thimac[i] {
            continue;
        }
        if let Some(p) = &t.parent {
            if !thimac_index.contains_key(p) {
                errors.push(StructureError::new(
                    DanglingReference,
                    Subject::Thimac(t.id.clone()),
                    format!("parent `{p}` of `{}` does not exist", t.id),
                ));
            }
        }
    }

    let n = thimacs.len();
    let declared_parent: Vec<Option<usize>> = thimacs
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if !keep_thimac[i] {
                return None;
            }
            t.parent.as_ref().and_then(|p| thimac_index.get(p).copied())
        })
        .collect();

    // Containment cycles over declared parents.
    let mut in_containment_cycle = vec![false; n];
    {
        // 0 = unvisited, 1 = on current walk, 2 = done
        let mut state = vec![0u8; n];
        for start in 0..n {
            if state[start] != 0 {
                continue;
            }
            let mut walk = Vec::new();
            let mut cursor = Some(start);
            while let Some(i) = cursor {
                match state[i] {
                    0 => {
                        state[i] = 1;
                        walk.push(i);
                        cursor = declared_parent[i];
                    }
                    1 => {
                        let from = walk.iter().position(|&w| w == i).unwrap_or(0);
                        let mut members: Vec<ThimacId> =
                            walk[from..].iter().map(|&w| thimacs[w].id.clone()).collect();
                        for &w in &walk[from..] {
                            in_containment_cycle[w] = true;
                        }
                        members.sort();
                        errors.push(
                            StructureError::new(
                                ContainmentCycle,
                                Subject::Thimac(members[0].clone()),
                                format!("containment cycle through {}", join_ids(&members)),
                            )
                            .with_members(members),
                        );
                        break;
                    }
                    _ => break,
                }
            }
            for w in walk {
                state[w] = 2;
            }
        }
    }

    // Part links: endpoints, self links, duplicates, COMPOSITE multiplicity.
    let mut graph: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (child, parent) in declared_parent.iter().enumerate() {
        if let Some(p) = parent {
            graph[*p].insert(child);
        }
    }
    let mut composite_wholes: Vec<BTreeSet<usize>> = declared_parent
        .iter()
        .map(|p| p.iter().copied().collect())
        .collect();
    let mut seen_pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut kept_links: Vec<PartLink> = Vec::new();
    for link in &part_links {
        let subject = Subject::PartLink(link.whole.clone(), link.part.clone());
        let (Some(&w), Some(&p)) = (thimac_index.get(&link.whole), thimac_index.get(&link.part))
        else {
            for end in [&link.whole, &link.part] {
                if !thimac_index.contains_key(end) {
                    errors.push(StructureError::new(
                        DanglingReference,
                        subject.clone(),
                        format!("part link refers to unknown thimac `{end}`"),
                    ));
                }
            }
            continue;
        };
        if w == p {
            errors.push(
                StructureError::new(
                    PartCycle,
                    subject,
                    format!("`{}` is declared a part of itself", link.whole),
                )
                .with_members(vec![link.whole.clone()]),
            );
            continue;
        }
        let implied = link.kind == LinkKind::Composite && declared_parent[p] == Some(w);
        if !seen_pairs.insert((w, p)) && !implied {
            errors.push(StructureError::new(
                DuplicateEdge,
                subject,
                format!("`{}` is already linked to part `{}`", link.whole, link.part),
            ));
            continue;
        }
        if declared_parent[p] == Some(w) && link.kind == LinkKind::Shared {
            errors.push(StructureError::new(
                DuplicateEdge,
                subject,
                format!(
                    "`{}` is already a composite part of `{}`",
                    link.part, link.whole
                ),
            ));
            continue;
        }
        if link.kind == LinkKind::Composite {
            composite_wholes[p].insert(w);
        }
        graph[w].insert(p);
        if !implied {
            kept_links.push(link.clone());
        }
    }
    for (p, wholes) in composite_wholes.iter().enumerate() {
        if wholes.len() > 1 {
            let mut members: Vec<ThimacId> =
                wholes.iter().map(|&w| thimacs[w].id.clone()).collect();
            members.sort();
            errors.push(
                StructureError::new(
                    MultipleCompositeWholes,
                    Subject::Thimac(thimacs[p].id.clone()),
                    format!(
                        "`{}` is a composite part of {} wholes: {}",
                        thimacs[p].id,
                        members.len(),
                        join_ids(&members)
                    ),
                )
                .with_members(members),
            );
        }
    }

    // Part cycles over parent edges plus all part links.
    for component in strongly_connected(&graph) {
        if component.len() < 2 || component.iter().all(|&i| in_containment_cycle[i]) {
            continue;
        }
        let mut members: Vec<ThimacId> = component.iter().map(|&i| thimacs[i].id.clone()).collect();
        members.sort();
        errors.push(
            StructureError::new(
                PartCycle,
                Subject::Thimac(members[0].clone()),
                format!(
                    "thimacs are transitively parts of themselves: {}",
                    join_ids(&members)
                ),
            )
            .with_members(members),
        );
    }

    // Actions.
    let mut action_index: HashMap<ActionId, usize> = HashMap::new();
    let mut kept_actions: Vec<Action> = Vec::new();
    for a in actions {
        if action_index.contains_key(&a.id) {
            errors.push(StructureError::new(
                DuplicateId,
                Subject::Action(a.id.clone()),
                format!("action `{}` is declared more than once", a.id),
            ));
            continue;
        }
        if !thimac_index.contains_key(&a.owner) {
            errors.push(StructureError::new(
                DanglingReference,
                Subject::Action(a.id.clone()),
                format!("owner `{}` of action `{}` does not exist", a.owner, a.id),
            ));
        }
        action_index.insert(a.id.clone(), kept_actions.len());
        kept_actions.push(a);
    }

    let kept_flows = check_edges(
        flows.into_iter().map(|f| (f.src, f.dst)),
        &action_index,
        EdgeKind::Flow,
        &mut errors,
    );
    let kept_triggers = check_edges(
        triggers.into_iter().map(|t| (t.src, t.dst)),
        &action_index,
        EdgeKind::Trigger,
        &mut errors,
    );

    if !errors.is_empty() {
        return Err(errors);
    }

    // Normalize: effective parents and a COMPOSITE link per parent edge.
    for (p, wholes) in composite_wholes.iter().enumerate() {
        if declared_parent[p].is_none() {
            if let Some(&w) = wholes.iter().next() {
                thimacs[p].parent = Some(thimacs[w].id.clone());
            }
        }
    }
    let mut links: Vec<PartLink> = Vec::with_capacity(kept_links.len() + n);
    for t in &thimacs {
        if let Some(parent) = &t.parent {
            links.push(PartLink::composite(parent, &t.id));
        }
    }
    for link in kept_links {
        if !(link.kind == LinkKind::Composite && links.contains(&link)) {
            links.push(link);
        }
    }

    let flows: Vec<Flow> = kept_flows
        .into_iter()
        .map(|(src, dst)| Flow { src, dst })
        .collect();
    let triggers: Vec<Trigger> = kept_triggers
        .into_iter()
        .map(|(src, dst)| Trigger { src, dst })
        .collect();

    Ok(StaticModel::assemble(
        thimacs,
        links,
        kept_actions,
        flows,
        triggers,
    ))
}

fn check_edges(
    edges: impl Iterator<Item = (ActionId, ActionId)>,
    actions: &HashMap<ActionId, usize>,
    kind: EdgeKind,
    errors: &mut Vec<StructureError>,
) -> Vec<(ActionId, ActionId)> {
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    for (src, dst) in edges {
        let subject = match kind {
            EdgeKind::Flow => Subject::Flow(src.clone(), dst.clone()),
            EdgeKind::Trigger => Subject::Trigger(src.clone(), dst.clone()),
        };
        let what = match kind {
            EdgeKind::Flow => "flow",
            EdgeKind::Trigger => "trigger",
        };
        let mut ok = true;
        for end in [&src, &dst] {
            if !actions.contains_key(end) {
                errors.push(StructureError::new(
                    StructureCode::DanglingReference,
                    subject.clone(),
                    format!("{what} refers to unknown action `{end}`"),
                ));
                ok = false;
            }
        }
        if src == dst {
            let code = match kind {
                EdgeKind::Flow => StructureCode::SelfFlow,
                EdgeKind::Trigger => StructureCode::SelfTrigger,
            };
            errors.push(StructureError::new(
                code,
                subject,
                format!("{what} from `{src}` to itself"),
            ));
            continue;
        }
        if !ok {
            continue;
        }
        if !seen.insert((src.clone(), dst.clone())) {
            errors.push(StructureError::new(
                StructureCode::DuplicateEdge,
                subject,
                format!("duplicate {what} `{src}` to `{dst}`"),
            ));
            continue;
        }
        kept.push((src, dst));
    }
    kept
}

impl StaticModel {
    fn assemble(
        thimacs: Vec<Thimac>,
        part_links: Vec<PartLink>,
        actions: Vec<Action>,
        flows: Vec<Flow>,
        triggers: Vec<Trigger>,
    ) -> Self {
        let thimac_index: HashMap<ThimacId, usize> = thimacs
            .iter()
            .enumerate()
            .map(|(i, t)| (t.id.clone(), i))
            .collect();
        let action_index: HashMap<ActionId, usize> = actions
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.clone(), i))
            .collect();
        let mut parts = vec![Vec::new(); thimacs.len()];
        for link in &part_links {
            parts[thimac_index[&link.whole]].push((thimac_index[&link.part], link.kind));
        }
        let mut flows_in = vec![Vec::new(); actions.len()];
        let mut flows_out = vec![Vec::new(); actions.len()];
        for (i, f) in flows.iter().enumerate() {
            flows_out[action_index[&f.src]].push(i);
            flows_in[action_index[&f.dst]].push(i);
        }
        let mut triggers_in = vec![Vec::new(); actions.len()];
        let mut triggers_out = vec![Vec::new(); actions.len()];
        for (i, t) in triggers.iter().enumerate() {
            triggers_out[action_index[&t.src]].push(i);
            triggers_in[action_index[&t.dst]].push(i);
        }
        StaticModel {
            thimacs,
            part_links,
            actions,
            flows,
            triggers,
            thimac_index,
            action_index,
            parts,
            flows_in,
            flows_out,
            triggers_in,
            triggers_out,
        }
    }
}

fn join_ids(ids: &[ThimacId]) -> String {
    ids.iter()
        .map(ThimacId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Strongly connected components (iterative Tarjan), each sorted, in order of
/// their smallest member.
fn strongly_connected(graph: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next = 0;
    let mut out = Vec::new();
    let succ: Vec<Vec<usize>> = graph.iter().map(|s| s.iter().copied().collect()).collect();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut child)) = call.last_mut() {
            if *child < succ[v].len() {
                let w = succ[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    out.push(component);
                }
            }
        }
    }
    out.sort();
    out
}

/// Parent chain of every thimac, for reporting. Returns ids from the root
/// down to `t`, or `None` for an unknown id.
pub fn ancestry(model: &StaticModel, t: &ThimacId) -> Option<Vec<ThimacId>> {
    let mut chain = vec![model.thimac(t)?.id.clone()];
    let mut cursor = model.thimac(t)?.parent.clone();
    while let Some(p) = cursor {
        cursor = model.thimac(&p).and_then(|x| x.parent.clone());
        chain.push(p);
    }
    chain.reverse();
    Some(chain)
}

/// Groups thimacs by their parent; roots are under `None`. Children keep
/// declaration order.
pub fn containment_tree(model: &StaticModel) -> BTreeMap<Option<ThimacId>, Vec<&Thimac>> {
    let mut tree: BTreeMap<Option<ThimacId>, Vec<&Thimac>> = BTreeMap::new();
    for t in model.thimacs() {
        tree.entry(t.parent.clone()).or_default().push(t);
    }
    tree
}
