//! Recursive-descent parser from tokens to an unresolved syntax tree.

use super::lexer::{Tok, Token};
use super::{ParseCode, ParseError, SourceSpan};
use crate::model::{ActionKind, StructureCode};

/// Deeper thimac nesting is rejected so parsing stays bounded.
pub(crate) const MAX_NESTING: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ActRef {
    pub kind: ActionKind,
    pub path: Vec<String>,
    pub label: Option<String>,
    pub span: SourceSpan,
}

impl ActRef {
    pub fn same_target(&self, other: &ActRef) -> bool {
        self.kind == other.kind && self.path == other.path && self.label == other.label
    }

    pub fn text(&self) -> String {
        let mut s = format!("{}.{}", self.kind, self.path.join("."));
        if let Some(l) = &self.label {
            s.push(':');
            s.push_str(l);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub(crate) struct EdgeDecl {
    pub src: ActRef,
    pub dst: ActRef,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) struct MachineEntry {
    pub kind: ActionKind,
    pub label: Option<String>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) enum Item {
    Thimac(ThimacDecl),
    Shared { path: Vec<String>, span: SourceSpan },
    Machine(Vec<MachineEntry>),
    Flow(EdgeDecl),
    Trigger(EdgeDecl),
}

#[derive(Debug, Clone)]
pub(crate) struct ThimacDecl {
    pub name: String,
    pub oo: bool,
    pub name_span: SourceSpan,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone)]
pub(crate) struct EventDecl {
    pub id: String,
    pub name: Option<String>,
    pub refs: Vec<ActRef>,
    pub time_label: Option<String>,
    pub id_span: SourceSpan,
}

#[derive(Debug, Clone)]
pub(crate) struct BehaviorDecl {
    pub id: String,
    pub id_span: SourceSpan,
    /// Each statement is a chain `A -> B -> C` (possibly a single event).
    pub chains: Vec<Vec<(String, SourceSpan)>>,
}

#[derive(Debug, Clone)]
pub(crate) enum TopItem {
    Thimac(ThimacDecl),
    Flow(EdgeDecl),
    Trigger(EdgeDecl),
    Event(EventDecl),
    Behavior(BehaviorDecl),
}

pub(crate) struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    pub errors: Vec<ParseError>,
}

type PResult<T> = Result<T, ()>;

impl<'t> Parser<'t> {
    pub fn new(tokens: &'t [Token]) -> Self {
        Parser {
            tokens,
            pos: 0,
            errors: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn token(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn error_here(&mut self, message: String) {
        let span = self.token().span;
        self.errors.push(ParseError {
            span,
            code: ParseCode::SyntaxError,
            message,
        });
    }

    fn expect(&mut self, want: Tok, what: &str) -> PResult<SourceSpan> {
        if *self.peek() == want {
            Ok(self.bump().span)
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected {what}, found {found}"));
            Err(())
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            let span = self.bump().span;
            Ok((s, span))
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected {what}, found {found}"));
            Err(())
        }
    }

    fn keyword(&mut self, kw: &str) -> PResult<()> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => {
                let found = other.describe();
                self.error_here(format!("expected `{kw}`, found {found}"));
                Err(())
            }
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn string(&mut self) -> PResult<String> {
        if let Tok::Str(s) = self.peek() {
            let s = s.clone();
            self.bump();
            Ok(s)
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected string literal, found {found}"));
            Err(())
        }
    }

    /// Span from the char offset `start` to the end of the previous token.
    fn span_since(&self, start: &Token) -> SourceSpan {
        let end = if self.pos == 0 {
            start.end
        } else {
            self.tokens[self.pos - 1].end.max(start.start)
        };
        SourceSpan {
            line: start.span.line,
            column: start.span.column,
            length: end - start.start,
        }
    }

    /// Skip to the end of the current statement: past the next `;`, or up
    /// to (not past) an unbalanced `}`.
    fn recover(&mut self) {
        self.recover_in(false)
    }

    /// At top level there is no enclosing block, so a stray `}` is skipped.
    fn recover_in(&mut self, top: bool) {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Semi if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::RBrace if depth == 0 && top => {
                    self.bump();
                }
                Tok::RBrace if depth == 0 => return,
                Tok::RBrace => {
                    depth -= 1;
                    self.bump();
                    if depth == 0 {
                        return;
                    }
                }
                Tok::LBrace => {
                    depth += 1;
                    self.bump();
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    pub fn document(&mut self) -> Vec<TopItem> {
        let mut items = Vec::new();
        while !self.at_eof() {
            let before = self.pos;
            let parsed = match self.peek() {
                Tok::Ident(kw) if kw == "thimac" => self.thimac(0).map(TopItem::Thimac),
                Tok::Ident(kw) if kw == "flow" => self.edge(true).map(TopItem::Flow),
                Tok::Ident(kw) if kw == "trigger" => self.edge(false).map(TopItem::Trigger),
                Tok::Ident(kw) if kw == "event" => self.event().map(TopItem::Event),
                Tok::Ident(kw) if kw == "behavior" => self.behavior().map(TopItem::Behavior),
                other => {
                    let found = other.describe();
                    self.error_here(format!(
                        "expected `thimac`, `flow`, `trigger`, `event` or `behavior`, found {found}"
                    ));
                    Err(())
                }
            };
            match parsed {
                Ok(item) => items.push(item),
                Err(()) => self.recover_in(true),
            }
            if self.pos == before {
                self.bump();
            }
        }
        items
    }

    fn thimac(&mut self, depth: usize) -> PResult<ThimacDecl> {
        self.keyword("thimac")?;
        let (name, name_span) = self.ident("thimac name")?;
        let oo = if self.at_keyword("oo") {
            self.bump();
            true
        } else {
            false
        };
        if depth >= MAX_NESTING {
            self.error_here(format!("thimac nesting deeper than {MAX_NESTING} levels"));
            return Err(());
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut items = Vec::new();
        loop {
            let before = self.pos;
            let parsed = match self.peek() {
                Tok::RBrace => {
                    self.bump();
                    break;
                }
                Tok::Eof => {
                    self.error_here(format!("unclosed block of thimac `{name}`"));
                    return Err(());
                }
                Tok::Ident(kw) if kw == "thimac" => self.thimac(depth + 1).map(Item::Thimac),
                Tok::Ident(kw) if kw == "shared" => self.shared(),
                Tok::Ident(kw) if kw == "machine" => self.machine().map(Item::Machine),
                Tok::Ident(kw) if kw == "flow" => self.edge(true).map(Item::Flow),
                Tok::Ident(kw) if kw == "trigger" => self.edge(false).map(Item::Trigger),
                other => {
                    let found = other.describe();
                    self.error_here(format!(
                        "expected `thimac`, `shared`, `machine`, `flow`, `trigger` or `}}`, found {found}"
                    ));
                    Err(())
                }
            };
            match parsed {
                Ok(item) => items.push(item),
                Err(()) => self.recover(),
            }
            if self.pos == before && !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
                self.bump();
            }
        }
        Ok(ThimacDecl {
            name,
            oo,
            name_span,
            items,
        })
    }

    fn shared(&mut self) -> PResult<Item> {
        let start = self.token().clone();
        self.keyword("shared")?;
        self.keyword("part")?;
        let path = self.path()?;
        self.expect(Tok::Semi, "`;`")?;
        Ok(Item::Shared {
            path,
            span: self.span_since(&start),
        })
    }

    fn path(&mut self) -> PResult<Vec<String>> {
        let mut path = vec![self.ident("thimac name")?.0];
        while *self.peek() == Tok::Dot {
            self.bump();
            path.push(self.ident("thimac name")?.0);
        }
        Ok(path)
    }

    fn kind(&mut self) -> PResult<ActionKind> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(kind) = ActionKind::from_keyword(s) {
                self.bump();
                return Ok(kind);
            }
        }
        let found = self.peek().describe();
        self.error_here(format!(
            "expected an action kind (create, process, release, transfer, receive), found {found}"
        ));
        Err(())
    }

    fn machine(&mut self) -> PResult<Vec<MachineEntry>> {
        self.keyword("machine")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut entries = Vec::new();
        while *self.peek() != Tok::RBrace {
            if self.at_eof() {
                self.error_here("unclosed machine block".to_owned());
                return Err(());
            }
            let start = self.token().clone();
            let entry = (|| {
                let kind = self.kind()?;
                let label = if *self.peek() == Tok::Colon {
                    self.bump();
                    Some(self.ident("thing label")?.0)
                } else {
                    None
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(MachineEntry {
                    kind,
                    label,
                    span: SourceSpan {
                        line: start.span.line,
                        column: start.span.column,
                        length: 0,
                    },
                })
            })();
            match entry {
                Ok(mut e) => {
                    e.span = self.span_since(&start);
                    entries.push(e);
                }
                Err(()) => {
                    let before = self.pos;
                    self.recover();
                    if self.pos == before && *self.peek() != Tok::RBrace {
                        self.bump();
                    }
                }
            }
        }
        self.bump();
        Ok(entries)
    }

    fn actref(&mut self) -> PResult<ActRef> {
        let start = self.token().clone();
        let kind = self.kind()?;
        self.expect(Tok::Dot, "`.` after action kind")?;
        let path = self.path()?;
        let label = if *self.peek() == Tok::Colon {
            self.bump();
            Some(self.ident("thing label")?.0)
        } else {
            None
        };
        Ok(ActRef {
            kind,
            path,
            label,
            span: self.span_since(&start),
        })
    }

    fn edge(&mut self, flow: bool) -> PResult<EdgeDecl> {
        let start = self.token().clone();
        self.keyword(if flow { "flow" } else { "trigger" })?;
        let src = self.actref()?;
        if flow {
            self.expect(Tok::Arrow, "`->`")?;
        } else {
            self.expect(Tok::Squiggle, "`~>`")?;
        }
        let dst = self.actref()?;
        let span = self.span_since(&start);
        if src.same_target(&dst) {
            let (code, what) = if flow {
                (ParseCode::Structure(StructureCode::SelfFlow), "flow")
            } else {
                (ParseCode::Structure(StructureCode::SelfTrigger), "trigger")
            };
            self.errors.push(ParseError {
                span,
                code,
                message: format!("{what} from `{}` to itself", src.text()),
            });
            self.expect(Tok::Semi, "`;`")?;
            return Err(());
        }
        self.expect(Tok::Semi, "`;`")?;
        Ok(EdgeDecl {
            src,
            dst,
            span: self.span_since(&start),
        })
    }

    fn event(&mut self) -> PResult<EventDecl> {
        self.keyword("event")?;
        let (id, id_span) = self.ident("event name")?;
        let name = if matches!(self.peek(), Tok::Str(_)) {
            Some(self.string()?)
        } else {
            None
        };
        self.keyword("over")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut refs = vec![self.actref()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            refs.push(self.actref()?);
        }
        self.expect(Tok::RBrace, "`}` or `,`")?;
        let time_label = if self.at_keyword("at") {
            self.bump();
            Some(self.string()?)
        } else {
            None
        };
        self.expect(Tok::Semi, "`;`")?;
        Ok(EventDecl {
            id,
            name,
            refs,
            time_label,
            id_span,
        })
    }

    fn behavior(&mut self) -> PResult<BehaviorDecl> {
        self.keyword("behavior")?;
        let (id, id_span) = self.ident("behavior name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut chains = Vec::new();
        while *self.peek() != Tok::RBrace {
            if self.at_eof() {
                self.error_here(format!("unclosed block of behavior `{id}`"));
                return Err(());
            }
            let chain = (|| {
                let mut chain = vec![self.ident("event name")?];
                while *self.peek() == Tok::Arrow {
                    self.bump();
                    chain.push(self.ident("event name")?);
                }
                self.expect(Tok::Semi, "`;` or `->`")?;
                Ok(chain)
            })();
            match chain {
                Ok(c) => chains.push(c),
                Err(()) => {
                    let before = self.pos;
                    self.recover();
                    if self.pos == before && *self.peek() != Tok::RBrace {
                        self.bump();
                    }
                }
            }
        }
        self.bump();
        Ok(BehaviorDecl {
            id,
            id_span,
            chains,
        })
    }
}
