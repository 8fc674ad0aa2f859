use super::{ParseCode, ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Dot,
    Arrow,
    Squiggle,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".to_owned(),
            Tok::LBrace => "`{`".to_owned(),
            Tok::RBrace => "`}`".to_owned(),
            Tok::Semi => "`;`".to_owned(),
            Tok::Colon => "`:`".to_owned(),
            Tok::Comma => "`,`".to_owned(),
            Tok::Dot => "`.`".to_owned(),
            Tok::Arrow => "`->`".to_owned(),
            Tok::Squiggle => "`~>`".to_owned(),
            Tok::Eof => "end of input".to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
    /// Char offsets into the source.
    pub start: usize,
    pub end: usize,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    offset: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.offset += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span_from(&self, line: usize, column: usize, start: usize) -> SourceSpan {
        SourceSpan {
            line,
            column,
            length: self.offset - start,
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn lex(text: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        offset: 0,
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();

    loop {
        let (line, column, start) = (cur.line, cur.column, cur.offset);
        let Some(c) = cur.bump() else {
            tokens.push(Token {
                tok: Tok::Eof,
                span: SourceSpan {
                    line,
                    column,
                    length: 0,
                },
                start,
                end: start,
            });
            break;
        };
        let tok = match c {
            ' ' | '\t' | '\n' | '\r' => continue,
            '/' if cur.peek() == Some('/') => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
                continue;
            }
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            ';' => Tok::Semi,
            ':' => Tok::Colon,
            ',' => Tok::Comma,
            '.' => Tok::Dot,
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Arrow
            }
            '~' if cur.peek() == Some('>') => {
                cur.bump();
                Tok::Squiggle
            }
            '"' => match lex_string(&mut cur) {
                Ok(s) => Tok::Str(s),
                Err(message) => {
                    errors.push(ParseError {
                        span: cur.span_from(line, column, start),
                        code: ParseCode::LexError,
                        message,
                    });
                    continue;
                }
            },
            c if is_ident_start(c) => {
                let mut s = String::from(c);
                while let Some(c) = cur.peek() {
                    if !is_ident_continue(c) {
                        break;
                    }
                    s.push(c);
                    cur.bump();
                }
                Tok::Ident(s)
            }
            other => {
                let message = if other.is_ascii_graphic() {
                    format!("unexpected character `{other}`")
                } else {
                    format!("unexpected character U+{:04X}", other as u32)
                };
                errors.push(ParseError {
                    span: cur.span_from(line, column, start),
                    code: ParseCode::LexError,
                    message,
                });
                continue;
            }
        };
        tokens.push(Token {
            tok,
            span: cur.span_from(line, column, start),
            start,
            end: cur.offset,
        });
    }
    (tokens, errors)
}

fn lex_string(cur: &mut Cursor<'_>) -> Result<String, String> {
    let mut s = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => return Err("unterminated string literal".to_owned()),
            Some('"') => {
                cur.bump();
                return Ok(s);
            }
            Some('\\') => {
                cur.bump();
                let escaped = match cur.peek() {
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some('n') => '\n',
                    Some('t') => '\t',
                    Some('r') => '\r',
                    None | Some('\n') => return Err("unterminated string literal".to_owned()),
                    Some(other) => {
                        cur.bump();
                        // consume the rest so the error spans the literal
                        while let Some(c) = cur.peek() {
                            if c == '"' || c == '\n' {
                                break;
                            }
                            cur.bump();
                        }
                        if cur.peek() == Some('"') {
                            cur.bump();
                        }
                        return Err(format!("unknown escape `\\{other}`"));
                    }
                };
                cur.bump();
                s.push(escaped);
            }
            Some(c) => {
                cur.bump();
                s.push(c);
            }
        }
    }
}

/// Quote a string so that [`lex`] reads it back unchanged.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_ident_start(c)) && chars.all(is_ident_continue)
}
