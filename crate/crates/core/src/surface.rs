//! Concrete syntax: lexer, recursive-descent parser and pretty-printer.
//!
//! Types: `Bool | Int | Ref T | T -> T | T * T | T + T | all a. T | ex a. T
//! | mu a. T | a | (T)`, with `Ref` binding tightest, then `*`, `+`, `->`.
//!
//! Terms follow the same notation: `\x:T. e`, `/\a. e`, `e [T]`, `<e, e>`,
//! `inl e as T`, `case e of inl x => e | inr y => e`, `pack <T, e> as T`,
//! `unpack <a, x> = e in e`, `fold e as T`, `unfold e`, `ref e`, `e := e`,
//! `!e`, `e = e`, `not e`. Application is left-associative juxtaposition.
//! Line comments start with `--`.

use std::fmt;

use thiserror::Error;

use crate::kernel::{LangLevel, Loc, Name, Term, Type};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {span}: {message} (expected {})", expected.join(" | "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
    pub expected: Vec<String>,
}

/// Source spans of a parsed term, shaped like the term itself.
///
/// Children follow [`Term::children`] order, so a path of child indices
/// from a type error resolves to the span of the failing subterm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanTree {
    pub span: SourceSpan,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    pub fn resolve(&self, path: &[usize]) -> SourceSpan {
        let mut node = self;
        for &i in path {
            match node.children.get(i) {
                Some(c) => node = c,
                None => break,
            }
        }
        node.span
    }
}

/// A `.lam` file: one term plus the level selected by its pragma.
#[derive(Clone, Debug)]
pub struct Program {
    pub level: LangLevel,
    pub term: Term,
    pub spans: SpanTree,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    LocLit(u64),
    Backslash,
    TyLambda,
    Dot,
    Colon,
    Arrow,
    FatArrow,
    Star,
    Plus,
    LParen,
    RParen,
    LAngle,
    RAngle,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Bar,
    Eq,
    Assign,
    Bang,
    Tilde,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::LocLit(n) => format!("location #l{n}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", symbol_text(other)),
        }
    }
}

fn symbol_text(t: &Tok) -> &'static str {
    match t {
        Tok::Backslash => "\\",
        Tok::TyLambda => "/\\",
        Tok::Dot => ".",
        Tok::Colon => ":",
        Tok::Arrow => "->",
        Tok::FatArrow => "=>",
        Tok::Star => "*",
        Tok::Plus => "+",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LAngle => "<",
        Tok::RAngle => ">",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Semi => ";",
        Tok::Bar => "|",
        Tok::Eq => "=",
        Tok::Assign => ":=",
        Tok::Bang => "!",
        Tok::Tilde => "~",
        _ => "?",
    }
}

const KEYWORDS: &[&str] = &[
    "true", "false", "if", "then", "else", "fst", "snd", "inl", "inr", "as", "case", "of", "pack", "unpack", "in",
    "fold", "unfold", "ref", "not", "all", "ex", "mu", "Bool", "Int", "Ref",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0, line: 1, col: 1 }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_char_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek_char() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('-') if self.peek_char_at(1) == Some('-') => {
                    while let Some(c) = self.peek_char() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    fn error(&self, start: (usize, usize, usize), message: impl Into<String>) -> ParseError {
        ParseError {
            span: SourceSpan { start: start.0, end: self.pos.max(start.0), line: start.1, column: start.2 },
            message: message.into(),
            expected: vec![],
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = (self.pos, self.line, self.col);
            let Some(c) = self.peek_char() else {
                out.push(Token { tok: Tok::Eof, span: self.span_from(start) });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek_char() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            } else if c.is_ascii_digit() || (c == '-' && self.peek_char_at(1).is_some_and(|d| d.is_ascii_digit())) {
                let mut s = String::new();
                s.push(c);
                self.bump();
                while let Some(d) = self.peek_char().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    self.bump();
                }
                let n: i64 = s.parse().map_err(|_| self.error(start, format!("integer literal `{s}` out of range")))?;
                Tok::Int(n)
            } else if c == '#' {
                self.bump();
                if self.peek_char() != Some('l') {
                    return Err(self.error(start, "unexpected `#`"));
                }
                self.bump();
                let mut s = String::new();
                while let Some(d) = self.peek_char().filter(|d| d.is_ascii_digit()) {
                    s.push(d);
                    self.bump();
                }
                let n: u64 = s.parse().map_err(|_| self.error(start, "malformed location token"))?;
                Tok::LocLit(n)
            } else {
                self.bump();
                let next = self.peek_char();
                let two = |lexer: &mut Self, t: Tok| {
                    lexer.bump();
                    t
                };
                match (c, next) {
                    ('-', Some('>')) => two(&mut self, Tok::Arrow),
                    ('=', Some('>')) => two(&mut self, Tok::FatArrow),
                    (':', Some('=')) => two(&mut self, Tok::Assign),
                    ('/', Some('\\')) => two(&mut self, Tok::TyLambda),
                    ('\\', _) => Tok::Backslash,
                    ('.', _) => Tok::Dot,
                    (':', _) => Tok::Colon,
                    ('*', _) => Tok::Star,
                    ('+', _) => Tok::Plus,
                    ('(', _) => Tok::LParen,
                    (')', _) => Tok::RParen,
                    ('<', _) => Tok::LAngle,
                    ('>', _) => Tok::RAngle,
                    ('[', _) => Tok::LBracket,
                    (']', _) => Tok::RBracket,
                    ('{', _) => Tok::LBrace,
                    ('}', _) => Tok::RBrace,
                    (',', _) => Tok::Comma,
                    (';', _) => Tok::Semi,
                    ('|', _) => Tok::Bar,
                    ('=', _) => Tok::Eq,
                    ('!', _) => Tok::Bang,
                    ('~', _) => Tok::Tilde,
                    _ => return Err(self.error(start, format!("unexpected character `{c}`"))),
                }
            };
            out.push(Token { tok, span: self.span_from(start) });
        }
    }

    fn span_from(&self, start: (usize, usize, usize)) -> SourceSpan {
        SourceSpan { start: start.0, end: self.pos, line: start.1, column: start.2 }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    allow_hole: bool,
    allow_locs: bool,
}

type PResult<T> = Result<T, ParseError>;

fn node(term: Term, span: SourceSpan, children: Vec<SpanTree>) -> (Term, SpanTree) {
    (term, SpanTree { span, children })
}

fn join(a: SourceSpan, b: SourceSpan) -> SourceSpan {
    SourceSpan { start: a.start, end: b.end.max(a.end), line: a.line, column: a.column }
}

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: Lexer::new(src).tokenize()?, pos: 0, allow_hole: false, allow_locs: false })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        let found = self.peek().describe();
        let message = match self.peek() {
            Tok::LocLit(_) => "location tokens are not part of the surface syntax".to_string(),
            _ => format!("unexpected {found}"),
        };
        Err(ParseError { span: self.span(), message, expected: expected.iter().map(|s| s.to_string()).collect() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            self.fail(&[kw])
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.advance();
            Ok(())
        } else {
            self.fail(&[symbol_text(&t)])
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(Name::from(s))
            }
            _ => self.fail(&["identifier"]),
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.fail(&["end of input"])
        }
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        for (kw, which) in [("all", 0), ("ex", 1), ("mu", 2)] {
            if self.is_kw(kw) {
                self.advance();
                let a = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = Box::new(self.ty()?);
                return Ok(match which {
                    0 => Type::Forall(a, body),
                    1 => Type::Exists(a, body),
                    _ => Type::Mu(a, body),
                });
            }
        }
        let lhs = self.ty_sum()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.ty()?;
            return Ok(Type::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_sum(&mut self) -> PResult<Type> {
        let mut t = self.ty_prod()?;
        while *self.peek() == Tok::Plus {
            self.advance();
            t = Type::sum(t, self.ty_prod()?);
        }
        Ok(t)
    }

    fn ty_prod(&mut self) -> PResult<Type> {
        let mut t = self.ty_ref()?;
        while *self.peek() == Tok::Star {
            self.advance();
            t = Type::prod(t, self.ty_ref()?);
        }
        Ok(t)
    }

    fn ty_ref(&mut self) -> PResult<Type> {
        if self.is_kw("Ref") {
            self.advance();
            return Ok(Type::reference(self.ty_ref()?));
        }
        self.ty_atom()
    }

    fn ty_atom(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "Bool" => {
                self.advance();
                Ok(Type::Bool)
            }
            Tok::Ident(s) if s == "Int" => {
                self.advance();
                Ok(Type::Int)
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(Type::Var(Name::from(s)))
            }
            Tok::LParen => {
                self.advance();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => self.fail(&["type"]),
        }
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<(Term, SpanTree)> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Backslash => {
                self.advance();
                let x = self.ident()?;
                self.expect(Tok::Colon)?;
                let t = self.ty()?;
                self.expect(Tok::Dot)?;
                let (body, bs) = self.term()?;
                let span = join(start, bs.span);
                Ok(node(Term::Lam(x, t, Box::new(body)), span, vec![bs]))
            }
            Tok::TyLambda => {
                self.advance();
                let a = self.ident()?;
                self.expect(Tok::Dot)?;
                let (body, bs) = self.term()?;
                let span = join(start, bs.span);
                Ok(node(Term::TyLam(a, Box::new(body)), span, vec![bs]))
            }
            Tok::Ident(s) if s == "if" => {
                self.advance();
                let (c, cs) = self.term()?;
                self.expect_kw("then")?;
                let (t, ts) = self.term()?;
                self.expect_kw("else")?;
                let (e, es) = self.term()?;
                let span = join(start, es.span);
                Ok(node(Term::if_(c, t, e), span, vec![cs, ts, es]))
            }
            Tok::Ident(s) if s == "case" => {
                self.advance();
                let (s, ss) = self.term()?;
                self.expect_kw("of")?;
                self.expect_kw("inl")?;
                let x = self.ident()?;
                self.expect(Tok::FatArrow)?;
                let (l, ls) = self.term()?;
                self.expect(Tok::Bar)?;
                self.expect_kw("inr")?;
                let y = self.ident()?;
                self.expect(Tok::FatArrow)?;
                let (r, rs) = self.term()?;
                let span = join(start, rs.span);
                Ok(node(Term::case(s, x, l, y, r), span, vec![ss, ls, rs]))
            }
            Tok::Ident(s) if s == "unpack" => {
                self.advance();
                self.expect(Tok::LAngle)?;
                let a = self.ident()?;
                self.expect(Tok::Comma)?;
                let x = self.ident()?;
                self.expect(Tok::RAngle)?;
                self.expect(Tok::Eq)?;
                let (p, ps) = self.term()?;
                self.expect_kw("in")?;
                let (b, bs) = self.term()?;
                let span = join(start, bs.span);
                Ok(node(Term::unpack(a, x, p, b), span, vec![ps, bs]))
            }
            _ => self.assign(),
        }
    }

    fn assign(&mut self) -> PResult<(Term, SpanTree)> {
        let (lhs, ls) = self.eq()?;
        if *self.peek() == Tok::Assign {
            self.advance();
            let (rhs, rs) = self.term()?;
            let span = join(ls.span, rs.span);
            return Ok(node(Term::assign(lhs, rhs), span, vec![ls, rs]));
        }
        Ok((lhs, ls))
    }

    fn eq(&mut self) -> PResult<(Term, SpanTree)> {
        let (mut lhs, mut ls) = self.app()?;
        while *self.peek() == Tok::Eq {
            self.advance();
            let (rhs, rs) = self.app()?;
            let span = join(ls.span, rs.span);
            let (t, s) = node(Term::int_eq(lhs, rhs), span, vec![ls, rs]);
            lhs = t;
            ls = s;
        }
        Ok((lhs, ls))
    }

    fn starts_prefix(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => !is_keyword(s) || matches!(s.as_str(), "true" | "false" | "fst" | "snd" | "unfold" | "ref" | "not"),
            Tok::Int(_) | Tok::LParen | Tok::LAngle | Tok::Bang | Tok::LocLit(_) => true,
            Tok::LBracket => self.allow_hole && *self.peek_at(1) == Tok::RBracket,
            _ => false,
        }
    }

    fn app(&mut self) -> PResult<(Term, SpanTree)> {
        let start = self.span();
        for (kw, which) in [("inl", 0), ("inr", 1), ("fold", 2)] {
            if self.is_kw(kw) {
                self.advance();
                let (e, es) = self.app()?;
                self.expect_kw("as")?;
                let t = self.ty()?;
                let span = join(start, self.prev_span());
                let term = match which {
                    0 => Term::inl(e, t),
                    1 => Term::inr(e, t),
                    _ => Term::fold(e, t),
                };
                return Ok(node(term, span, vec![es]));
            }
        }
        if self.is_kw("pack") {
            self.advance();
            self.expect(Tok::LAngle)?;
            let w = self.ty()?;
            self.expect(Tok::Comma)?;
            let (e, es) = self.term()?;
            self.expect(Tok::RAngle)?;
            self.expect_kw("as")?;
            let t = self.ty()?;
            let span = join(start, self.prev_span());
            return Ok(node(Term::pack(w, e, t), span, vec![es]));
        }
        if !self.starts_prefix() {
            return self.fail(&["term"]);
        }
        let (mut f, mut fs) = self.prefix()?;
        loop {
            if *self.peek() == Tok::LBracket && !(self.allow_hole && *self.peek_at(1) == Tok::RBracket) {
                self.advance();
                let t = self.ty()?;
                self.expect(Tok::RBracket)?;
                let span = join(fs.span, self.prev_span());
                let (nf, nfs) = node(Term::ty_app(f, t), span, vec![fs]);
                f = nf;
                fs = nfs;
            } else if self.starts_prefix() {
                let (a, as_) = self.prefix()?;
                let span = join(fs.span, as_.span);
                let (nf, nfs) = node(Term::app(f, a), span, vec![fs, as_]);
                f = nf;
                fs = nfs;
            } else {
                break;
            }
        }
        Ok((f, fs))
    }

    fn prefix(&mut self) -> PResult<(Term, SpanTree)> {
        let start = self.span();
        let op: Option<fn(Term) -> Term> = match self.peek() {
            Tok::Ident(s) if s == "fst" => Some(Term::fst),
            Tok::Ident(s) if s == "snd" => Some(Term::snd),
            Tok::Ident(s) if s == "unfold" => Some(Term::unfold),
            Tok::Ident(s) if s == "ref" => Some(Term::alloc),
            Tok::Ident(s) if s == "not" => Some(Term::not),
            Tok::Bang => Some(Term::deref),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let (e, es) = self.prefix()?;
            let span = join(start, es.span);
            return Ok(node(op(e), span, vec![es]));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<(Term, SpanTree)> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.advance();
                Ok(node(Term::True, start, vec![]))
            }
            Tok::Ident(s) if s == "false" => {
                self.advance();
                Ok(node(Term::False, start, vec![]))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(node(Term::Var(Name::from(s)), start, vec![]))
            }
            Tok::Int(n) => {
                self.advance();
                Ok(node(Term::Int(n), start, vec![]))
            }
            Tok::LocLit(n) if self.allow_locs => {
                self.advance();
                Ok(node(Term::Loc(Loc(n)), start, vec![]))
            }
            Tok::LParen => {
                self.advance();
                let (e, es) = self.term()?;
                self.expect(Tok::RParen)?;
                Ok((e, es))
            }
            Tok::LAngle => {
                self.advance();
                let (a, as_) = self.term()?;
                self.expect(Tok::Comma)?;
                let (b, bs) = self.term()?;
                self.expect(Tok::RAngle)?;
                let span = join(start, self.prev_span());
                Ok(node(Term::pair(a, b), span, vec![as_, bs]))
            }
            Tok::LBracket if self.allow_hole && *self.peek_at(1) == Tok::RBracket => {
                self.advance();
                self.advance();
                Ok(node(Term::Hole, join(start, self.prev_span()), vec![]))
            }
            _ => self.fail(&["term"]),
        }
    }
}

fn parser_for(src: &str) -> PResult<Parser> {
    Parser::new(src)
}

pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let mut p = parser_for(text)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    parse_term_spanned(text).map(|(t, _)| t)
}

pub fn parse_term_spanned(text: &str) -> Result<(Term, SpanTree), ParseError> {
    let mut p = parser_for(text)?;
    let out = p.term()?;
    p.expect_eof()?;
    Ok(out)
}

/// Parses a program context, in which `[]` denotes the hole.
pub fn parse_context(text: &str) -> Result<Term, ParseError> {
    let mut p = parser_for(text)?;
    p.allow_hole = true;
    let (t, _) = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a term that may mention `#l<n>` location tokens. Only for
/// API-level tests and literals that name heap cells.
pub fn parse_term_with_locs(text: &str) -> Result<Term, ParseError> {
    let mut p = parser_for(text)?;
    p.allow_locs = true;
    let (t, _) = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a `.lam` file, honouring a leading `-- level: <name>` pragma.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut level = LangLevel::full();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let Some(comment) = line.strip_prefix("--") else { break };
        if let Some(name) = comment.trim().strip_prefix("level:") {
            level = name.trim().parse().map_err(|e: crate::kernel::LevelError| ParseError {
                span: SourceSpan::default(),
                message: e.to_string(),
                expected: vec!["language level".to_string()],
            })?;
            break;
        }
    }
    let (term, spans) = parse_term_spanned(text)?;
    if let Err(e) = level.check(&term) {
        return Err(ParseError { span: spans.span, message: e.to_string(), expected: vec![] });
    }
    Ok(Program { level, term, spans })
}

/// Raw relation literal `R : T1 ~ T2 { (e1, e2); ... }`. The header is
/// optional; without it the pair types are left to the caller to infer.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationLiteral {
    pub types: Option<(Type, Type)>,
    pub pairs: Vec<(Term, Term)>,
}

pub fn parse_relation_literal(text: &str) -> Result<RelationLiteral, ParseError> {
    let mut p = parser_for(text)?;
    let mut types = None;
    if *p.peek() != Tok::LBrace {
        p.ident()?;
        p.expect(Tok::Colon)?;
        let left = p.ty()?;
        p.expect(Tok::Tilde)?;
        let right = p.ty()?;
        types = Some((left, right));
    }
    p.expect(Tok::LBrace)?;
    let mut pairs = Vec::new();
    while *p.peek() != Tok::RBrace {
        p.expect(Tok::LParen)?;
        let (a, _) = p.term()?;
        p.expect(Tok::Comma)?;
        let (b, _) = p.term()?;
        p.expect(Tok::RParen)?;
        pairs.push((a, b));
        if *p.peek() == Tok::Semi {
            p.advance();
        } else if *p.peek() != Tok::RBrace {
            return p.fail(&[";", "}"]);
        }
    }
    p.expect(Tok::RBrace)?;
    p.expect_eof()?;
    Ok(RelationLiteral { types, pairs })
}

/// Raw world literal `W { #l0 : Bool; #l1 : Int -> Int }`.
pub fn parse_world_literal(text: &str) -> Result<Vec<(Loc, Type)>, ParseError> {
    let mut p = parser_for(text)?;
    if p.is_kw("W") || matches!(p.peek(), Tok::Ident(s) if s == "W") {
        p.advance();
    }
    p.expect(Tok::LBrace)?;
    let mut out = Vec::new();
    while *p.peek() != Tok::RBrace {
        let l = match p.peek().clone() {
            Tok::LocLit(n) => {
                p.advance();
                Loc(n)
            }
            _ => return p.fail(&["location"]),
        };
        p.expect(Tok::Colon)?;
        let t = p.ty()?;
        out.push((l, t));
        if *p.peek() == Tok::Semi {
            p.advance();
        } else if *p.peek() != Tok::RBrace {
            return p.fail(&[";", "}"]);
        }
    }
    p.expect(Tok::RBrace)?;
    p.expect_eof()?;
    Ok(out)
}

// ---- printing ----

const TY_BINDER: u8 = 0;
const TY_ARROW: u8 = 1;
const TY_SUM: u8 = 2;
const TY_PROD: u8 = 3;
const TY_REF: u8 = 4;

pub fn print_type(t: &Type) -> String {
    let mut out = String::new();
    write_type(&mut out, t, TY_BINDER);
    out
}

fn type_level(t: &Type) -> u8 {
    match t {
        Type::Forall(..) | Type::Exists(..) | Type::Mu(..) => TY_BINDER,
        Type::Arrow(..) => TY_ARROW,
        Type::Sum(..) => TY_SUM,
        Type::Prod(..) => TY_PROD,
        Type::Ref(_) => TY_REF,
        Type::Bool | Type::Int | Type::Var(_) => TY_REF + 1,
    }
}

fn write_type(out: &mut String, t: &Type, required: u8) {
    let parens = type_level(t) < required;
    if parens {
        out.push('(');
    }
    match t {
        Type::Bool => out.push_str("Bool"),
        Type::Int => out.push_str("Int"),
        Type::Var(a) => out.push_str(a.as_str()),
        Type::Arrow(a, b) => {
            write_type(out, a, TY_SUM);
            out.push_str(" -> ");
            write_type(out, b, TY_ARROW);
        }
        Type::Sum(a, b) => {
            write_type(out, a, TY_SUM);
            out.push_str(" + ");
            write_type(out, b, TY_PROD);
        }
        Type::Prod(a, b) => {
            write_type(out, a, TY_PROD);
            out.push_str(" * ");
            write_type(out, b, TY_REF);
        }
        Type::Ref(a) => {
            out.push_str("Ref ");
            write_type(out, a, TY_REF);
        }
        Type::Forall(a, body) | Type::Exists(a, body) | Type::Mu(a, body) => {
            out.push_str(match t {
                Type::Forall(..) => "all ",
                Type::Exists(..) => "ex ",
                _ => "mu ",
            });
            out.push_str(a.as_str());
            out.push_str(". ");
            write_type(out, body, TY_BINDER);
        }
    }
    if parens {
        out.push(')');
    }
}

const P_TERM: u8 = 0;
const P_ASSIGN: u8 = 1;
const P_EQ: u8 = 2;
const P_HEAD: u8 = 3;
const P_APP: u8 = 4;
const P_PREFIX: u8 = 5;

fn term_level(e: &Term) -> u8 {
    match e {
        Term::Lam(..) | Term::TyLam(..) | Term::If(..) | Term::Case { .. } | Term::Unpack(..) => P_TERM,
        Term::Assign(..) => P_ASSIGN,
        Term::IntEq(..) => P_EQ,
        Term::Inl(..) | Term::Inr(..) | Term::Fold(..) | Term::Pack(..) => P_HEAD,
        Term::App(..) | Term::TyApp(..) => P_APP,
        Term::Fst(_) | Term::Snd(_) | Term::Unfold(_) | Term::Alloc(_) | Term::Deref(_) | Term::Not(_) => P_PREFIX,
        _ => P_PREFIX + 1,
    }
}

pub fn print_term(e: &Term) -> String {
    let mut out = String::new();
    write_term(&mut out, e, P_TERM);
    out
}

fn write_term(out: &mut String, e: &Term, required: u8) {
    let parens = term_level(e) < required;
    if parens {
        out.push('(');
    }
    match e {
        Term::Var(x) => out.push_str(x.as_str()),
        Term::True => out.push_str("true"),
        Term::False => out.push_str("false"),
        Term::Int(n) => out.push_str(&n.to_string()),
        Term::Loc(l) => out.push_str(&l.to_string()),
        Term::Hole => out.push_str("[]"),
        Term::If(c, t, f) => {
            out.push_str("if ");
            write_term(out, c, P_TERM);
            out.push_str(" then ");
            write_term(out, t, P_TERM);
            out.push_str(" else ");
            write_term(out, f, P_TERM);
        }
        Term::Lam(x, t, body) => {
            out.push('\\');
            out.push_str(x.as_str());
            out.push_str(":");
            write_type(out, t, TY_BINDER);
            out.push_str(". ");
            write_term(out, body, P_TERM);
        }
        Term::TyLam(a, body) => {
            out.push_str("/\\");
            out.push_str(a.as_str());
            out.push_str(". ");
            write_term(out, body, P_TERM);
        }
        Term::App(f, a) => {
            write_term(out, f, P_APP);
            out.push(' ');
            write_term(out, a, P_PREFIX + 1);
        }
        Term::TyApp(f, t) => {
            write_term(out, f, P_APP);
            out.push_str(" [");
            write_type(out, t, TY_BINDER);
            out.push(']');
        }
        Term::Pair(a, b) => {
            out.push('<');
            write_term(out, a, P_TERM);
            out.push_str(", ");
            write_term(out, b, P_TERM);
            out.push('>');
        }
        Term::Fst(a) | Term::Snd(a) | Term::Unfold(a) | Term::Alloc(a) | Term::Not(a) => {
            out.push_str(match e {
                Term::Fst(_) => "fst ",
                Term::Snd(_) => "snd ",
                Term::Unfold(_) => "unfold ",
                Term::Alloc(_) => "ref ",
                _ => "not ",
            });
            write_term(out, a, P_PREFIX);
        }
        Term::Deref(a) => {
            out.push('!');
            write_term(out, a, P_PREFIX);
        }
        Term::Inl(a, t) | Term::Inr(a, t) | Term::Fold(a, t) => {
            out.push_str(match e {
                Term::Inl(..) => "inl ",
                Term::Inr(..) => "inr ",
                _ => "fold ",
            });
            write_term(out, a, P_APP);
            out.push_str(" as ");
            write_type(out, t, TY_BINDER);
        }
        Term::Pack(w, a, t) => {
            out.push_str("pack <");
            write_type(out, w, TY_BINDER);
            out.push_str(", ");
            write_term(out, a, P_TERM);
            out.push_str("> as ");
            write_type(out, t, TY_BINDER);
        }
        Term::Case { scrutinee, left_var, left, right_var, right } => {
            out.push_str("case ");
            write_term(out, scrutinee, P_TERM);
            out.push_str(" of inl ");
            out.push_str(left_var.as_str());
            out.push_str(" => ");
            write_term(out, left, P_TERM);
            out.push_str(" | inr ");
            out.push_str(right_var.as_str());
            out.push_str(" => ");
            write_term(out, right, P_TERM);
        }
        Term::Unpack(a, x, packed, body) => {
            out.push_str("unpack <");
            out.push_str(a.as_str());
            out.push_str(", ");
            out.push_str(x.as_str());
            out.push_str("> = ");
            write_term(out, packed, P_TERM);
            out.push_str(" in ");
            write_term(out, body, P_TERM);
        }
        Term::Assign(l, r) => {
            write_term(out, l, P_EQ);
            out.push_str(" := ");
            write_term(out, r, P_TERM);
        }
        Term::IntEq(l, r) => {
            write_term(out, l, P_EQ);
            out.push_str(" = ");
            write_term(out, r, P_HEAD);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}
